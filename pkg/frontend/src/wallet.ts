/**
 * Local wallet: keeps the Ed25519 secret client-side, fetches nonces from
 * the node, and signs every transaction in the browser. The node never
 * sees a secret key.
 */

import { ApiClient, ApiError } from "./api";
import { fromHex, toHex } from "./codec";
import { Keypair, addressToHex, deriveAddress, generateKeypair, keypairFromSecret } from "./keys";
import { Payload, SignedTransaction, buildAndSign, buildRegistration, txHash } from "./tx";

export interface WalletStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const STORAGE_KEY = "blockcampus.wallet";

export class LocalWallet {
  constructor(public keypair: Keypair) {}

  static generate(): LocalWallet {
    return new LocalWallet(generateKeypair());
  }

  static fromSecretHex(secretHex: string): LocalWallet {
    return new LocalWallet(keypairFromSecret(fromHex(secretHex)));
  }

  static load(storage: WalletStorage): LocalWallet | null {
    const raw = storage.getItem(STORAGE_KEY);
    if (!raw) return null;
    const parsed = JSON.parse(raw) as { secret_hex: string };
    return LocalWallet.fromSecretHex(parsed.secret_hex);
  }

  save(storage: WalletStorage): void {
    storage.setItem(
      STORAGE_KEY,
      JSON.stringify({
        secret_hex: toHex(this.keypair.secret),
        pubkey_hex: toHex(this.keypair.pubkey),
      }),
    );
  }

  get address(): string {
    return addressToHex(deriveAddress(this.keypair.pubkey));
  }

  /** Current account nonce, or 0 when unregistered. */
  async nextNonce(api: ApiClient): Promise<number> {
    try {
      return (await api.account(this.address)).nonce;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return 0;
      throw err;
    }
  }

  async buildTx(
    api: ApiClient,
    kind: string,
    payload: Payload,
  ): Promise<SignedTransaction> {
    const params = await api.chainParams();
    const nonce = await this.nextNonce(api);
    return buildAndSign(this.keypair, params.chain_id, nonce, kind, payload);
  }

  async submit(
    api: ApiClient,
    kind: string,
    payload: Payload,
  ): Promise<string> {
    return api.submitTx(await this.buildTx(api, kind, payload));
  }

  /** Registration needs an admin co-signature produced out of band. */
  async register(
    api: ApiClient,
    admin: Keypair,
    username: string,
    role = "Student",
  ): Promise<string> {
    const params = await api.chainParams();
    const tx = buildRegistration(
      this.keypair,
      admin,
      params.chain_id,
      username,
      role,
    );
    return api.submitTx(tx);
  }

  hashOfTx(tx: SignedTransaction): string {
    return toHex(txHash(tx));
  }
}
