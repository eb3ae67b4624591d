/** Transaction building and signing — digests must match the node exactly. */

import { Canonical, hashOf, toHex } from "./codec";
import { Keypair, sign } from "./keys";

export type Payload = { [key: string]: Canonical };

export interface SignedTransaction {
  chain_id: string;
  nonce: number;
  sender_pubkey: string; // hex
  kind: string;
  payload: Payload;
  signature: string; // hex
}

function signingEnvelope(tx: Omit<SignedTransaction, "signature">): {
  [key: string]: Canonical;
} {
  return {
    chain_id: tx.chain_id,
    nonce: tx.nonce,
    sender_pubkey: tx.sender_pubkey,
    kind: tx.kind,
    payload: tx.payload,
  };
}

export function signingDigest(
  tx: Omit<SignedTransaction, "signature">,
): Uint8Array {
  return hashOf(signingEnvelope(tx));
}

export function txHash(tx: SignedTransaction): Uint8Array {
  return hashOf({ ...signingEnvelope(tx), signature: tx.signature });
}

export function buildAndSign(
  keypair: Keypair,
  chainId: string,
  nonce: number,
  kind: string,
  payload: Payload,
): SignedTransaction {
  const unsigned = {
    chain_id: chainId,
    nonce,
    sender_pubkey: toHex(keypair.pubkey),
    kind,
    payload,
  };
  const signature = toHex(sign(keypair.secret, signingDigest(unsigned)));
  return { ...unsigned, signature };
}

/** What an approving admin co-signs to enroll a new account. */
export function registrationDigest(
  chainId: string,
  senderPubkey: Uint8Array,
  username: string,
  role: string,
): Uint8Array {
  return hashOf({
    chain_id: chainId,
    kind: "RegisterUser",
    sender_pubkey: senderPubkey,
    username,
    role,
  });
}

export function buildRegistration(
  user: Keypair,
  admin: Keypair,
  chainId: string,
  username: string,
  role: string,
): SignedTransaction {
  const digest = registrationDigest(chainId, user.pubkey, username, role);
  return buildAndSign(user, chainId, 0, "RegisterUser", {
    username,
    role,
    admin_pubkey: toHex(admin.pubkey),
    admin_sig: toHex(sign(admin.secret, digest)),
  });
}
