#!/usr/bin/env node
/**
 * One-shot sandbox runner.
 *
 * Reads a single JSON request {context, body, test, timeout_ms} on stdin,
 * runs the candidate program in a jailed python3 child, and writes exactly
 * one JSON outcome {status, output?, duration_ms, detail?} to stdout.
 *
 * Protocol rules:
 * - a conformant request always yields exit code 0 and one line of JSON,
 *   whatever the candidate does (errors become status "runtime_error",
 *   overruns become status "timeout");
 * - a malformed request yields a nonzero exit code and nothing on stdout;
 * - candidate prints and our own diagnostics never pollute stdout.
 */

import { spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

interface RunnerRequest {
  context: string;
  body: string;
  test: string;
  timeout_ms: number;
}

// The child process does the actual work: define the function from
// context + body, evaluate the test expression, and report one JSON
// object.  Candidate stdout is swallowed and network access is stubbed
// out; the working-directory jail comes from the spawn cwd.
const DRIVER = `
import io, json, socket, sys, time

def _deny(*args, **kwargs):
    raise RuntimeError("network access is disabled")

request = json.load(sys.stdin)
socket.socket = _deny
socket.create_connection = _deny

source = request["context"]
if not source.endswith("\\n"):
    source += "\\n"
source += request["body"]

namespace = {"__name__": "__candidate__"}
status, output, detail = "ok", None, None
start = time.monotonic()
real_stdout = sys.stdout
sys.stdout = io.StringIO()
try:
    exec(compile(source, "<candidate>", "exec"), namespace)
    try:
        expr = compile(request["test"], "<test>", "eval")
    except SyntaxError:
        exec(compile(request["test"], "<test>", "exec"), namespace)
        value = None
    else:
        value = eval(expr, namespace)
    output = repr(value)
except BaseException as exc:
    status = "runtime_error"
    detail = type(exc).__name__
finally:
    sys.stdout = real_stdout

result = {"status": status, "duration_ms": int((time.monotonic() - start) * 1000)}
if status == "ok":
    result["output"] = output
if detail is not None:
    result["detail"] = detail
print(json.dumps(result))
`;

function parseRequest(text: string): RunnerRequest | null {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    return null;
  }
  const record = data as Record<string, unknown>;
  if (typeof record.context !== "string") return null;
  if (typeof record.body !== "string") return null;
  if (typeof record.test !== "string") return null;
  if (
    typeof record.timeout_ms !== "number" ||
    !Number.isInteger(record.timeout_ms) ||
    record.timeout_ms <= 0
  ) {
    return null;
  }
  return {
    context: record.context,
    body: record.body,
    test: record.test,
    timeout_ms: record.timeout_ms,
  };
}

async function readStdin(): Promise<string> {
  const chunks: Buffer[] = [];
  for await (const chunk of process.stdin) {
    chunks.push(chunk as Buffer);
  }
  return Buffer.concat(chunks).toString("utf-8");
}

function emit(outcome: object): void {
  process.stdout.write(JSON.stringify(outcome) + "\n");
}

function runCandidate(request: RunnerRequest, jail: string): Promise<number> {
  return new Promise((resolve) => {
    // -I: isolated mode, no user site-packages and no cwd on sys.path
    const child = spawn("python3", ["-I", "-c", DRIVER], {
      cwd: jail,
      stdio: ["pipe", "pipe", "inherit"],
    });
    const started = Date.now();
    let collected = "";
    let timedOut = false;
    const timer = setTimeout(() => {
      timedOut = true;
      child.kill("SIGKILL");
    }, request.timeout_ms);

    child.stdout.on("data", (chunk) => {
      collected += chunk;
    });
    child.on("error", () => {
      clearTimeout(timer);
      process.stderr.write("failed to spawn python3\n");
      resolve(1);
    });
    child.on("close", (code) => {
      clearTimeout(timer);
      if (timedOut) {
        emit({ status: "timeout", duration_ms: Date.now() - started });
        resolve(0);
        return;
      }
      if (code !== 0) {
        process.stderr.write(`driver exited with code ${code}\n`);
        resolve(1);
        return;
      }
      let outcome: object;
      try {
        outcome = JSON.parse(collected);
      } catch {
        process.stderr.write("driver produced no outcome\n");
        resolve(1);
        return;
      }
      emit(outcome);
      resolve(0);
    });

    child.stdin.write(JSON.stringify(request));
    child.stdin.end();
  });
}

async function main(): Promise<number> {
  const request = parseRequest(await readStdin());
  if (request === null) {
    process.stderr.write("malformed runner request\n");
    return 2;
  }
  const jail = mkdtempSync(join(tmpdir(), "candidate-"));
  try {
    return await runCandidate(request, jail);
  } finally {
    rmSync(jail, { recursive: true, force: true });
  }
}

main().then((code) => process.exit(code));
