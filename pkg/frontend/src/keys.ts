/** Ed25519 keypairs and address rendering, mirroring the node's scheme. */

import { ed25519 } from "@noble/curves/ed25519.js";

import { fromHex, sha256, toHex } from "./codec";

export const ADDRESS_LEN = 20;

export interface Keypair {
  secret: Uint8Array;
  pubkey: Uint8Array;
}

export function keypairFromSecret(secret: Uint8Array): Keypair {
  if (secret.length !== 32) throw new Error("secret must be 32 bytes");
  return { secret, pubkey: ed25519.getPublicKey(secret) };
}

export function generateKeypair(): Keypair {
  return keypairFromSecret(ed25519.utils.randomSecretKey());
}

export function deriveAddress(pubkey: Uint8Array): Uint8Array {
  return sha256(pubkey).slice(0, ADDRESS_LEN);
}

export function addressToHex(address: Uint8Array): string {
  if (address.length !== ADDRESS_LEN) throw new Error("bad address length");
  return "0x" + toHex(address);
}

export function addressFromHex(hex: string): Uint8Array {
  if (!/^0x[0-9a-f]{40}$/.test(hex)) throw new Error(`bad address: ${hex}`);
  return fromHex(hex.slice(2));
}

export function sign(secret: Uint8Array, message: Uint8Array): Uint8Array {
  return ed25519.sign(message, secret);
}

export function verify(
  pubkey: Uint8Array,
  signature: Uint8Array,
  message: Uint8Array,
): boolean {
  try {
    return ed25519.verify(signature, message, pubkey);
  } catch {
    return false;
  }
}
