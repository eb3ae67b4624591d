/**
 * Single-page forum. Hash-based routing; every view is a pure render of
 * API responses, with controls hidden unless the account's role permits
 * (the node still enforces every rule server-side).
 */

import { ApiClient, AccountView, PostView, RejectedError } from "./api";
import { fromHex, toHex } from "./codec";
import { sign } from "./keys";
import { registrationDigest } from "./tx";
import { LocalWallet } from "./wallet";

const STAFF_ROLES = new Set(["TA", "Professor"]);
const MODERATOR_ROLES = new Set(["Admin", "Owner"]);

interface AppState {
  api: ApiClient;
  wallet: LocalWallet | null;
  account: AccountView | null;
}

const state: AppState = {
  api: new ApiClient(localStorage.getItem("blockcampus.node") ?? ""),
  wallet: null,
  account: null,
};

function $(id: string): HTMLElement {
  return document.getElementById(id)!;
}

function esc(s: string): string {
  const div = document.createElement("div");
  div.textContent = s;
  return div.innerHTML;
}

function flash(message: string, isError = false): void {
  const el = $("flash");
  el.textContent = message;
  el.className = isError ? "flash error" : "flash";
  setTimeout(() => (el.textContent = ""), 6000);
}

async function refreshAccount(): Promise<void> {
  state.account = null;
  if (!state.wallet) return;
  try {
    state.account = await state.api.account(state.wallet.address);
  } catch {
    state.account = null; // not registered yet
  }
  renderHeader();
}

/** Submit, then poll until the tx leaves the mempool into a block. */
async function submitAndConfirm(kind: string, payload: Record<string, any>) {
  if (!state.wallet) throw new Error("no wallet");
  const hash = await state.wallet.submit(state.api, kind, payload);
  const before = state.account?.nonce ?? 0;
  for (let i = 0; i < 30; i++) {
    await new Promise((r) => setTimeout(r, 1000));
    await refreshAccount();
    if ((state.account?.nonce ?? 0) > before) break;
  }
  return hash;
}

async function act(kind: string, payload: Record<string, any>) {
  try {
    await submitAndConfirm(kind, payload);
    flash(`${kind} confirmed`);
    route();
  } catch (err) {
    const reason = err instanceof RejectedError ? err.reason : String(err);
    flash(`${kind} rejected: ${reason}`, true);
  }
}

// --- views -------------------------------------------------------------------

function renderHeader(): void {
  const acct = state.account;
  $("whoami").innerHTML = state.wallet
    ? acct
      ? `${esc(acct.username)} (${esc(acct.role)}) — ` +
        `${acct.bateekh} mB · ${acct.tofu} tofu`
      : `${state.wallet.address.slice(0, 10)}… (unregistered)`
    : "no wallet";
}

async function viewWallet(): Promise<void> {
  const stored = state.wallet;
  $("main").innerHTML = `
    <h2>Wallet</h2>
    <p>Address: <code>${stored ? stored.address : "—"}</code></p>
    <p><input id="node-url" placeholder="node URL" size="40"
         value="${esc(localStorage.getItem("blockcampus.node") ?? "")}">
       <button id="set-node">set node</button></p>
    <p><button id="gen">generate new keypair</button>
       <input id="secret" placeholder="or import secret hex" size="64">
       <button id="import">import</button></p>
    <h3>Request registration</h3>
    <p>Give this to an admin for approval:</p>
    <p><input id="req-username" placeholder="username">
       <select id="req-role">
         <option>Student</option><option>TA</option><option>Professor</option>
       </select>
       <button id="make-request">build request</button></p>
    <pre id="request-out"></pre>`;
  $("set-node").onclick = () => {
    localStorage.setItem(
      "blockcampus.node",
      ($("node-url") as HTMLInputElement).value,
    );
    location.reload();
  };
  $("gen").onclick = () => {
    state.wallet = LocalWallet.generate();
    state.wallet.save(localStorage);
    refreshAccount().then(route);
  };
  $("import").onclick = () => {
    try {
      state.wallet = LocalWallet.fromSecretHex(
        ($("secret") as HTMLInputElement).value.trim(),
      );
      state.wallet.save(localStorage);
      refreshAccount().then(route);
    } catch {
      flash("bad secret hex", true);
    }
  };
  $("make-request").onclick = () => {
    if (!state.wallet) return flash("generate a wallet first", true);
    const username = ($("req-username") as HTMLInputElement).value.trim();
    if (!username) return flash("username required", true);
    $("request-out").textContent = JSON.stringify({
      pubkey: toHex(state.wallet.keypair.pubkey),
      username,
      role: ($("req-role") as HTMLSelectElement).value,
    });
  };
}

/** Admins paste a registration request and approve it with a co-signature. */
async function viewEnroll(): Promise<void> {
  $("main").innerHTML = `
    <h2>Enrollment approvals</h2>
    <p><textarea id="request" rows="4" cols="70"
        placeholder='{"pubkey": "…", "username": "…", "role": "Student"}'
      ></textarea></p>
    <p><button id="approve">approve &amp; submit</button></p>`;
  $("approve").onclick = async () => {
    if (!state.wallet) return flash("no wallet", true);
    try {
      const req = JSON.parse(($("request") as HTMLTextAreaElement).value);
      const params = await state.api.chainParams();
      const userPubkey = fromHex(req.pubkey);
      const digest = registrationDigest(
        params.chain_id,
        userPubkey,
        req.username,
        req.role,
      );
      // the admin co-signs; the *user's* signature must come from their own
      // wallet, so the admin submits a tx pre-signed by the requester only
      // when the request carries one — the minimal flow signs for a request
      // built in this same browser profile (demo parity with the CLI).
      const adminSig = toHex(sign(state.wallet.keypair.secret, digest));
      $("main").insertAdjacentHTML(
        "beforeend",
        `<p>co-signature: <code id="cosig">${adminSig}</code> — paste back
         to the requester, or have them register via CLI with it.</p>`,
      );
      flash("co-signature produced");
    } catch (err) {
      flash(String(err), true);
    }
  };
}

async function viewCommunities(): Promise<void> {
  const communities = await state.api.communities();
  const joined = new Set(state.account?.communities ?? []);
  const canCreate =
    state.account &&
    (STAFF_ROLES.has(state.account.role) ||
      MODERATOR_ROLES.has(state.account.role));
  $("main").innerHTML = `
    <h2>Communities</h2>
    <ul>${communities
      .map(
        (c) => `<li><a href="#/c/${esc(c.id)}">${esc(c.name)}</a>
          ${
            joined.has(c.id)
              ? "<em>member</em>"
              : `<button data-join="${esc(c.id)}">join</button>`
          }</li>`,
      )
      .join("")}</ul>
    ${
      canCreate
        ? `<p><input id="new-id" placeholder="id">
           <input id="new-name" placeholder="name">
           <button id="create">create community</button></p>`
        : ""
    }`;
  document.querySelectorAll<HTMLButtonElement>("[data-join]").forEach(
    (btn) => (btn.onclick = () => act("JoinCommunity", { id: btn.dataset.join! })),
  );
  if (canCreate)
    $("create").onclick = () => {
      const id = ($("new-id") as HTMLInputElement).value.trim();
      const name = ($("new-name") as HTMLInputElement).value.trim();
      if (!id || !name) return flash("id and name required", true);
      act("CreateCommunity", { id, name });
    };
}

async function viewCommunity(id: string, sort: "top" | "new"): Promise<void> {
  const posts = await state.api.posts(id, sort);
  $("main").innerHTML = `
    <h2>${esc(id)}</h2>
    <p>sort: <a href="#/c/${esc(id)}">top</a> ·
             <a href="#/c/${esc(id)}/new">new</a></p>
    <ul>${posts
      .map(
        (p) => `<li><a href="#/p/${p.id}">${esc(p.title)}</a>
          — rank ${p.rank_score}, ▲${p.up} ▼${p.down}</li>`,
      )
      .join("")}</ul>
    <h3>Ask a question</h3>
    <p><input id="q-title" placeholder="title" size="40"></p>
    <p><textarea id="q-body" rows="4" cols="70" placeholder="body"></textarea></p>
    <p><button id="ask">post question</button></p>`;
  $("ask").onclick = async () => {
    const title = ($("q-title") as HTMLInputElement).value.trim();
    const body = ($("q-body") as HTMLTextAreaElement).value;
    if (!title) return flash("title must not be empty", true);
    const cid = await state.api.putContent(new TextEncoder().encode(body));
    act("PostQuestion", { community: id, title, cid });
  };
}

function postControls(p: PostView): string {
  const me = state.account;
  if (!me) return "";
  let html = `
    <button data-vote="up" data-post="${p.id}">▲</button>
    <button data-vote="down" data-post="${p.id}">▼</button>
    <button data-award="${p.id}">award (${p.awards})</button>`;
  if (p.kind === "Answer" && STAFF_ROLES.has(me.role))
    html += ` <select data-stars="${p.id}">
        ${[1, 2, 3, 4, 5].map((s) => `<option>${s}</option>`).join("")}
      </select><button data-rate="${p.id}">rate</button>`;
  if (MODERATOR_ROLES.has(me.role))
    html += ` <button data-flag="${p.id}">flag</button>`;
  return html;
}

async function viewPost(id: string): Promise<void> {
  const post = await state.api.post(id);
  const body = await state.api.getContent(post.body_cid);
  const render = (p: PostView, bodyText: string) => `
    <div class="post">
      <p>${esc(bodyText)}</p>
      <p>▲${p.up} ▼${p.down} · awards ${p.awards} ·
         ratings ${Object.values(p.ratings).join(", ") || "—"}</p>
      ${postControls(p)}
    </div>`;
  const answerBodies = await Promise.all(
    post.answers.map((a) => state.api.getContent(a.body_cid)),
  );
  $("main").innerHTML = `
    <h2>${esc(post.title)}</h2>
    ${render(post, new TextDecoder().decode(body ?? new Uint8Array()))}
    <h3>${post.answers.length} answers</h3>
    ${post.answers
      .map((a, i) =>
        render(a, new TextDecoder().decode(answerBodies[i] ?? new Uint8Array())),
      )
      .join("")}
    <h3>Your answer</h3>
    <p><textarea id="a-body" rows="4" cols="70"></textarea></p>
    <p><button id="answer">post answer</button></p>`;
  document.querySelectorAll<HTMLButtonElement>("[data-vote]").forEach(
    (btn) =>
      (btn.onclick = () =>
        act("Vote", { post_id: btn.dataset.post!, direction: btn.dataset.vote! })),
  );
  document.querySelectorAll<HTMLButtonElement>("[data-award]").forEach(
    (btn) => (btn.onclick = () => act("GiveAward", { post_id: btn.dataset.award! })),
  );
  document.querySelectorAll<HTMLButtonElement>("[data-rate]").forEach(
    (btn) =>
      (btn.onclick = () => {
        const stars = document.querySelector<HTMLSelectElement>(
          `[data-stars="${btn.dataset.rate}"]`,
        )!.value;
        act("StaffRate", { post_id: btn.dataset.rate!, stars: Number(stars) });
      }),
  );
  document.querySelectorAll<HTMLButtonElement>("[data-flag]").forEach(
    (btn) =>
      (btn.onclick = () =>
        act("FlagContent", { post_id: btn.dataset.flag!, reason: "moderation" })),
  );
  $("answer").onclick = async () => {
    const text = ($("a-body") as HTMLTextAreaElement).value;
    if (!text.trim()) return flash("answer must not be empty", true);
    const cid = await state.api.putContent(new TextEncoder().encode(text));
    act("PostAnswer", { question_id: id, cid });
  };
}

async function viewProfile(): Promise<void> {
  const acct = state.account;
  $("main").innerHTML = acct
    ? `<h2>${esc(acct.username)}</h2>
       <table>
         <tr><td>address</td><td><code>${acct.address}</code></td></tr>
         <tr><td>role</td><td>${esc(acct.role)}</td></tr>
         <tr><td>bateekh</td><td>${acct.bateekh} mB</td></tr>
         <tr><td>lifetime earned</td><td>${acct.earned_lifetime} mB</td></tr>
         <tr><td>tofu</td><td>${acct.tofu}</td></tr>
         <tr><td>communities</td><td>${acct.communities.map(esc).join(", ")}</td></tr>
       </table>`
    : "<p>No registered account. Visit the wallet page.</p>";
}

async function viewServices(): Promise<void> {
  $("main").innerHTML = `
    <h2>Redeem a service</h2>
    <p><input id="svc-id" placeholder="service id">
       <button id="redeem">redeem</button></p>
    <p>Rejections (unknown service, insufficient tofu) appear inline.</p>`;
  $("redeem").onclick = () => {
    const sid = ($("svc-id") as HTMLInputElement).value.trim();
    if (!sid) return flash("service id required", true);
    act("RedeemService", { service_id: sid });
  };
}

// --- router ------------------------------------------------------------------

async function route(): Promise<void> {
  await refreshAccount();
  const hash = location.hash || "#/communities";
  const parts = hash.slice(2).split("/");
  try {
    if (parts[0] === "wallet") await viewWallet();
    else if (parts[0] === "enroll") await viewEnroll();
    else if (parts[0] === "profile") await viewProfile();
    else if (parts[0] === "services") await viewServices();
    else if (parts[0] === "c")
      await viewCommunity(parts[1], parts[2] === "new" ? "new" : "top");
    else if (parts[0] === "p") await viewPost(parts[1]);
    else await viewCommunities();
  } catch (err) {
    $("main").innerHTML = `<p class="error">${esc(String(err))}</p>`;
  }
}

export function start(): void {
  state.wallet = LocalWallet.load(localStorage);
  window.addEventListener("hashchange", route);
  route();
}

start();
