/**
 * Wire protocol: one JSON object per line over stdin/stdout.
 *
 * Requests:  {id, op: "alphabet"} or {id, op: "next_dist", prefix: [...]}
 * Responses: {id, alphabet: [...]} | {id, dist: {token: prob, "$": prob}}
 *            | {id, error: "..."}
 *
 * A line that cannot be parsed into a request with a numeric id is
 * answered with an error response carrying id -1; everything else echoes
 * the request id, including errors, so the client can keep its pipeline.
 */

export interface AlphabetRequest {
  id: number;
  op: "alphabet";
}

export interface NextDistRequest {
  id: number;
  op: "next_dist";
  prefix: string[];
}

export type BridgeRequest = AlphabetRequest | NextDistRequest;

export interface AlphabetResponse {
  id: number;
  alphabet: string[];
}

export interface DistResponse {
  id: number;
  dist: Record<string, number>;
}

export interface ErrorResponse {
  id: number;
  error: string;
}

export type BridgeResponse = AlphabetResponse | DistResponse | ErrorResponse;

export const MALFORMED_ID = -1;

/** Parse one line into a request, or an error response to send back. */
export function parseRequest(line: string): BridgeRequest | ErrorResponse {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return { id: MALFORMED_ID, error: "line is not valid JSON" };
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return { id: MALFORMED_ID, error: "request must be a JSON object" };
  }
  const req = obj as Record<string, unknown>;
  if (typeof req.id !== "number" || !Number.isInteger(req.id)) {
    return { id: MALFORMED_ID, error: "request lacks an integer id" };
  }
  const id = req.id;
  if (req.op === "alphabet") {
    return { id, op: "alphabet" };
  }
  if (req.op === "next_dist") {
    const prefix = req.prefix;
    if (!Array.isArray(prefix) || !prefix.every((t) => typeof t === "string")) {
      return { id, error: "next_dist needs a prefix array of tokens" };
    }
    return { id, op: "next_dist", prefix };
  }
  return { id, error: `unknown op ${JSON.stringify(req.op)}` };
}

export function serialize(res: BridgeResponse): string {
  return JSON.stringify(res) + "\n";
}
