/**
 * Stdio model server: reads one request per line, answers one response
 * per line, and exits cleanly at end of input.  Each request is handled
 * in isolation -- the model walk restarts from the initial state on every
 * query -- so responses do not depend on request order.
 *
 * Usage: node dist/server.js MODEL.pdfa
 */

import { createInterface } from "node:readline";
import { fileURLToPath } from "node:url";
import type { Readable, Writable } from "node:stream";

import { loadPdfa, ServableModel } from "./pdfa.js";
import { BridgeResponse, parseRequest, serialize } from "./protocol.js";

export function handleLine(model: ServableModel, line: string): BridgeResponse {
  const req = parseRequest(line);
  if ("error" in req) {
    return req;
  }
  if (req.op === "alphabet") {
    return { id: req.id, alphabet: model.alphabet() };
  }
  try {
    return { id: req.id, dist: model.nextDist(req.prefix) };
  } catch (err) {
    return { id: req.id, error: err instanceof Error ? err.message : String(err) };
  }
}

export function serve(
  model: ServableModel,
  input: Readable = process.stdin,
  output: Writable = process.stdout,
): Promise<void> {
  const lines = createInterface({ input, terminal: false });
  return new Promise((resolve) => {
    lines.on("line", (line) => {
      if (line.trim() === "") {
        return;
      }
      output.write(serialize(handleLine(model, line)));
    });
    lines.on("close", resolve);
  });
}

async function main(): Promise<void> {
  const path = process.argv[2];
  if (!path) {
    process.stderr.write("usage: server.js MODEL.pdfa\n");
    process.exit(1);
  }
  let model: ServableModel;
  try {
    model = loadPdfa(path);
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    process.stderr.write(`cannot load model ${path}: ${message}\n`);
    process.exit(1);
  }
  await serve(model!);
}

if (process.argv[1] === fileURLToPath(import.meta.url)) {
  void main();
}
