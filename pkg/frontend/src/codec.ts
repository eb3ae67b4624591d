/**
 * Canonical JSON encoding, byte-compatible with the node's codec:
 * compact separators, bytewise-sorted keys, UTF-8, no floats,
 * byte arrays rendered as lowercase hex strings.
 */

import { sha256 as nobleSha256 } from "@noble/hashes/sha2.js";

export type Canonical =
  | null
  | boolean
  | number
  | string
  | Uint8Array
  | Canonical[]
  | { [key: string]: Canonical };

export class EncodingError extends Error {}

const SHORT_ESCAPES: Record<number, string> = {
  0x08: "\\b",
  0x09: "\\t",
  0x0a: "\\n",
  0x0c: "\\f",
  0x0d: "\\r",
};

function encodeString(s: string): string {
  let out = '"';
  for (const ch of s) {
    const cp = ch.codePointAt(0)!;
    if (ch === '"') out += '\\"';
    else if (ch === "\\") out += "\\\\";
    else if (cp < 0x20)
      out += SHORT_ESCAPES[cp] ?? "\\u" + cp.toString(16).padStart(4, "0");
    else out += ch;
  }
  return out + '"';
}

/** Key order: code-point comparison, equivalent to UTF-8 bytewise order. */
function compareKeys(a: string, b: string): number {
  const pa = Array.from(a);
  const pb = Array.from(b);
  const n = Math.min(pa.length, pb.length);
  for (let i = 0; i < n; i++) {
    const d = pa[i].codePointAt(0)! - pb[i].codePointAt(0)!;
    if (d !== 0) return d;
  }
  return pa.length - pb.length;
}

function stringify(value: Canonical): string {
  if (value === null) return "null";
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") {
    if (!Number.isSafeInteger(value))
      throw new EncodingError(`only safe integers are encodable: ${value}`);
    return String(value);
  }
  if (typeof value === "string") return encodeString(value);
  if (value instanceof Uint8Array) return encodeString(toHex(value));
  if (Array.isArray(value)) return "[" + value.map(stringify).join(",") + "]";
  if (typeof value === "object") {
    const keys = Object.keys(value).sort(compareKeys);
    const parts = keys.map((k) => encodeString(k) + ":" + stringify(value[k]));
    return "{" + parts.join(",") + "}";
  }
  throw new EncodingError(`unencodable value: ${typeof value}`);
}

export function canonicalEncode(value: Canonical): Uint8Array {
  return new TextEncoder().encode(stringify(value));
}

export function sha256(data: Uint8Array): Uint8Array {
  return nobleSha256(data);
}

export function hashOf(value: Canonical): Uint8Array {
  return sha256(canonicalEncode(value));
}

export function toHex(data: Uint8Array): string {
  let out = "";
  for (const b of data) out += b.toString(16).padStart(2, "0");
  return out;
}

export function fromHex(hex: string): Uint8Array {
  if (hex.length % 2 !== 0 || /[^0-9a-f]/.test(hex))
    throw new EncodingError(`bad hex: ${hex}`);
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++)
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  return out;
}
