/** Typed client for the node's HTTP JSON API — the forum's only backend. */

import { SignedTransaction } from "./tx";

export interface AccountView {
  address: string;
  pubkey: string;
  username: string;
  role: string;
  nonce: number;
  bateekh: number;
  earned_lifetime: number;
  tofu: number;
  active: boolean;
  communities: string[];
}

export interface PostView {
  id: string;
  kind: "Question" | "Answer";
  author: string;
  community: string;
  title: string;
  body_cid: string;
  created_height: number;
  up: number;
  down: number;
  ratings: Record<string, number>;
  awards: number;
  hidden: boolean;
  rank_score: number;
}

export interface PostDetail extends PostView {
  answers: PostView[];
}

export interface ChainParams {
  chain_id: string;
  consensus: Record<string, number>;
  econ: Record<string, number>;
  validators: string[];
  head_height: number;
  head_state_root: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export class RejectedError extends ApiError {
  constructor(public reason: string) {
    super(400, `transaction rejected: ${reason}`);
  }
}

export class ApiClient {
  constructor(private baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    const body = await resp.json();
    if (!resp.ok) throw new ApiError(resp.status, body.error ?? "request failed");
    return body as T;
  }

  async submitTx(tx: SignedTransaction): Promise<string> {
    const resp = await fetch(this.baseUrl + "/v1/transactions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(tx),
    });
    const body = await resp.json();
    if (!resp.ok) throw new RejectedError(body.reason ?? "unknown");
    return body.tx_hash as string;
  }

  account(address: string): Promise<AccountView> {
    return this.getJson(`/v1/accounts/${address}`);
  }

  chainParams(): Promise<ChainParams> {
    return this.getJson("/v1/chain/params");
  }

  communities(): Promise<{ id: string; name: string; creator: string }[]> {
    return this.getJson("/v1/communities");
  }

  posts(
    communityId: string,
    sort: "top" | "new" = "top",
    limit = 50,
    offset = 0,
  ): Promise<PostView[]> {
    return this.getJson(
      `/v1/communities/${communityId}/posts?sort=${sort}&limit=${limit}&offset=${offset}`,
    );
  }

  post(id: string): Promise<PostDetail> {
    return this.getJson(`/v1/posts/${id}`);
  }

  head(): Promise<{ hash: string; header: Record<string, unknown> }> {
    return this.getJson("/v1/blocks/head");
  }

  async putContent(body: Uint8Array): Promise<string> {
    const resp = await fetch(this.baseUrl + "/v1/content", {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body: body as unknown as BodyInit,
    });
    const parsed = await resp.json();
    if (!resp.ok) throw new ApiError(resp.status, parsed.error ?? "upload failed");
    return parsed.cid as string;
  }

  async getContent(cid: string): Promise<Uint8Array | null> {
    const resp = await fetch(this.baseUrl + `/v1/content/${cid}`);
    if (resp.status === 404) return null;
    if (!resp.ok) throw new ApiError(resp.status, "content fetch failed");
    return new Uint8Array(await resp.arrayBuffer());
  }
}
