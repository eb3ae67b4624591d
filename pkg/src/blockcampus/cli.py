"""Command-line interface: keys, genesis, node operation, transaction
authoring, chain queries, and simulator runs.

Signing always happens locally against a keypair file; the node never sees
secrets. Node-to-node gossip over HTTP reuses the same message dicts as the
in-process simulator, posted to each peer's /v1/p2p endpoint.
"""

from __future__ import annotations

import json
import sys
import threading
import time
from pathlib import Path

import click
import requests

from .econ import EconParams
from .genesis import BootstrapAccount, GenesisFile
from .keys import Keypair, address_to_hex, sign
from .ledger import SignedTransaction, make_tx, sign_tx
from .node import BROADCAST, Node
from .sim import SimConfig, Simulation
from .state import registration_digest


def _emit(data: dict, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps(data, sort_keys=True))
    else:
        for key, value in data.items():
            click.echo(f"{key}: {value}")


def _fail(message: str) -> None:
    raise click.ClickException(message)


def _get(node_url: str, path: str) -> dict:
    resp = requests.get(node_url.rstrip("/") + path, timeout=10)
    if resp.status_code == 404:
        _fail(resp.json().get("error", "not found"))
    resp.raise_for_status()
    return resp.json()


@click.group()
def main() -> None:
    """blockcampus node and wallet tooling."""


# -- keys ---------------------------------------------------------------------


@main.command()
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--json", "as_json", is_flag=True)
def keygen(out: str, as_json: bool) -> None:
    """Generate a keypair file and print its address."""
    kp = Keypair.generate()
    kp.save(out)
    _emit({"address": address_to_hex(kp.address), "file": out}, as_json)


# -- genesis ------------------------------------------------------------------


@main.group()
def genesis() -> None:
    """Genesis file management."""


@genesis.command("init")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--chain-id", default="blockcampus-dev", show_default=True)
@click.option("--validators", "n_validators", default=4, show_default=True)
@click.option(
    "--keys-dir",
    type=click.Path(file_okay=False),
    default=None,
    help="Where validator keypair files are written (default: next to --out).",
)
@click.option("--json", "as_json", is_flag=True)
def genesis_init(
    out: str, chain_id: str, n_validators: int, keys_dir: str, as_json: bool
) -> None:
    """Write a GenesisFile with default parameters and fresh validator keys.

    The first validator is the Owner, the rest are Admins.
    """
    if n_validators < 1:
        _fail("need at least one validator")
    directory = Path(keys_dir) if keys_dir else Path(out).resolve().parent
    directory.mkdir(parents=True, exist_ok=True)
    keypairs = [Keypair.generate() for _ in range(n_validators)]
    accounts = []
    key_files = []
    for i, kp in enumerate(keypairs):
        path = directory / f"validator-{i}.json"
        kp.save(path)
        key_files.append(str(path))
        role = "Owner" if i == 0 else "Admin"
        accounts.append(
            BootstrapAccount(pubkey=kp.pubkey, username=f"validator-{i}", role=role)
        )
    if n_validators == 1:
        # a lone Owner still needs an Admin for registration co-signing
        admin = Keypair.generate()
        path = directory / "admin.json"
        admin.save(path)
        key_files.append(str(path))
        accounts.append(
            BootstrapAccount(pubkey=admin.pubkey, username="admin", role="Admin")
        )
    gfile = GenesisFile(
        chain_id=chain_id,
        validators=tuple(kp.address for kp in keypairs),
        econ=EconParams(),
        bootstrap_accounts=tuple(accounts),
    )
    gfile.save(out)
    _emit(
        {
            "genesis": out,
            "chain_id": chain_id,
            "validators": ",".join(address_to_hex(kp.address) for kp in keypairs),
            "key_files": ",".join(key_files),
        },
        as_json,
    )


# -- node ---------------------------------------------------------------------


@main.group("node")
def node_group() -> None:
    """Node operation."""


@node_group.command("run")
@click.option("--genesis", "genesis_path", type=click.Path(exists=True), required=True)
@click.option("--key", "key_path", type=click.Path(exists=True), default=None)
@click.option("--peers", default="", help="Comma-separated peer base URLs.")
@click.option("--bind", default="127.0.0.1:8545", show_default=True)
@click.option("--public-url", default=None, help="URL peers can reach us at.")
def node_run(
    genesis_path: str, key_path: str, peers: str, bind: str, public_url: str
) -> None:
    """Run a node with its HTTP gateway, gossiping to a static peer list."""
    import uvicorn

    from .api import create_app

    gfile = GenesisFile.load(genesis_path)
    keypair = Keypair.load(key_path) if key_path else None
    host, _, port_str = bind.partition(":")
    port = int(port_str or "8545")
    self_url = public_url or f"http://{host}:{port}"
    peer_urls = [p.strip().rstrip("/") for p in peers.split(",") if p.strip()]

    node = Node(gfile, node_id=self_url, keypair=keypair)
    app = create_app(node)
    lock = threading.Lock()

    def dispatch() -> None:
        with lock:
            pending = node.drain_outbox()
        for dest, msg in pending:
            targets = peer_urls if dest == BROADCAST else [dest]
            for url in targets:
                try:
                    requests.post(
                        url + "/v1/p2p",
                        json=msg,
                        headers={"x-node-id": self_url},
                        timeout=5,
                    )
                except requests.RequestException:
                    continue  # unreachable peers are retried via later gossip

    def tick_loop() -> None:
        while True:
            with lock:
                node.tick(int(time.time()))
            dispatch()
            time.sleep(1)

    threading.Thread(target=tick_loop, daemon=True).start()
    click.echo(f"listening on {self_url} (validator={node.is_validator()})")
    uvicorn.run(app, host=host or "127.0.0.1", port=port, log_level="warning")


# -- transactions -------------------------------------------------------------


def _payload_option(*decls, **attrs):
    def wrap(f):
        return click.option(*decls, required=True, **attrs)(f)

    return wrap


def _submit(key_path: str, node_url: str, kind: str, payload: dict,
            nonce: int | None, as_json: bool) -> None:
    kp = Keypair.load(key_path)
    if nonce is None:
        if kind == "RegisterUser":
            nonce = 0
        else:
            acct = _get(node_url, f"/v1/accounts/{address_to_hex(kp.address)}")
            nonce = acct["nonce"]
    params = _get(node_url, "/v1/chain/params")
    tx = sign_tx(
        make_tx(
            chain_id=params["chain_id"],
            nonce=nonce,
            sender_pubkey=kp.pubkey,
            kind=kind,
            payload=payload,
        ),
        kp.secret,
    )
    resp = requests.post(
        node_url.rstrip("/") + "/v1/transactions", json=tx.to_dict(), timeout=10
    )
    body = resp.json()
    if resp.status_code != 200:
        if as_json:
            click.echo(json.dumps(body, sort_keys=True))
            sys.exit(1)
        _fail(f"rejected: {body.get('reason', 'unknown')}")
    _emit(body, as_json)


def _tx_command(kind: str, options: list):
    """Register one `tx <kind>` subcommand with one flag per payload field."""

    @click.option("--key", "key_path", type=click.Path(exists=True), required=True)
    @click.option("--node-url", default="http://127.0.0.1:8545", show_default=True)
    @click.option("--nonce", type=int, default=None, help="Override the fetched nonce.")
    @click.option("--json", "as_json", is_flag=True)
    def run(key_path, node_url, nonce, as_json, **payload):
        _submit(key_path, node_url, kind, payload, nonce, as_json)

    for opt in reversed(options):
        run = opt(run)
    name = "".join(
        "-" + c.lower() if c.isupper() and i else c.lower()
        for i, c in enumerate(kind)
    )
    tx.command(name)(run)


@main.group()
def tx() -> None:
    """Build, sign, and submit a transaction."""


@tx.command("register-user")
@click.option("--key", "key_path", type=click.Path(exists=True), required=True)
@click.option("--admin-key", type=click.Path(exists=True), required=True,
              help="Keypair file of the co-signing admin.")
@click.option("--username", required=True)
@click.option("--role", default="Student", show_default=True)
@click.option("--node-url", default="http://127.0.0.1:8545", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def tx_register_user(key_path, admin_key, username, role, node_url, as_json):
    kp = Keypair.load(key_path)
    admin = Keypair.load(admin_key)
    params = _get(node_url, "/v1/chain/params")
    digest = registration_digest(params["chain_id"], kp.pubkey, username, role)
    payload = {
        "username": username,
        "role": role,
        "admin_pubkey": admin.pubkey.hex(),
        "admin_sig": sign(admin.secret, digest).hex(),
    }
    _submit(key_path, node_url, "RegisterUser", payload, 0, as_json)


_tx_command("GrantRole", [_payload_option("--target"), _payload_option("--role")])
_tx_command("RevokeRole", [_payload_option("--target")])
_tx_command("CreateCommunity", [_payload_option("--id"), _payload_option("--name")])
_tx_command("JoinCommunity", [_payload_option("--id")])
_tx_command(
    "PostQuestion",
    [
        _payload_option("--community"),
        _payload_option("--title"),
        _payload_option("--cid"),
    ],
)
_tx_command(
    "PostAnswer", [_payload_option("--question-id"), _payload_option("--cid")]
)
_tx_command(
    "Vote",
    [
        _payload_option("--post", "post_id"),
        _payload_option("--dir", "direction", type=click.Choice(["up", "down"])),
    ],
)
_tx_command(
    "StaffRate",
    [_payload_option("--post", "post_id"), _payload_option("--stars", type=int)],
)
_tx_command("GiveAward", [_payload_option("--post", "post_id")])
_tx_command(
    "TransferTofu",
    [_payload_option("--to"), _payload_option("--amount", type=int)],
)
_tx_command(
    "CreateService",
    [
        _payload_option("--id"),
        _payload_option("--name"),
        _payload_option("--price", type=int),
    ],
)
_tx_command("RedeemService", [_payload_option("--service", "service_id")])
_tx_command(
    "FlagContent",
    [_payload_option("--post", "post_id"), _payload_option("--reason")],
)
_tx_command("DeactivateAccount", [_payload_option("--target")])


# -- content ------------------------------------------------------------------


@main.group()
def content() -> None:
    """Content store access."""


@content.command("put")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--node-url", default="http://127.0.0.1:8545", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def content_put(file, node_url, as_json):
    data = Path(file).read_bytes()
    resp = requests.post(node_url.rstrip("/") + "/v1/content", data=data, timeout=10)
    if resp.status_code != 200:
        _fail(resp.json().get("error", "upload failed"))
    _emit(resp.json(), as_json)


@content.command("get")
@click.argument("cid")
@click.option("--node-url", default="http://127.0.0.1:8545", show_default=True)
def content_get(cid, node_url):
    resp = requests.get(node_url.rstrip("/") + f"/v1/content/{cid}", timeout=10)
    if resp.status_code != 200:
        _fail("unknown content")
    sys.stdout.buffer.write(resp.content)


# -- queries ------------------------------------------------------------------


@main.group()
def query() -> None:
    """Read-only chain queries."""


@query.command("account")
@click.argument("address")
@click.option("--node-url", default="http://127.0.0.1:8545", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def query_account(address, node_url, as_json):
    view = _get(node_url, f"/v1/accounts/{address}")
    _emit(view, as_json)


@query.command("post")
@click.argument("post_id")
@click.option("--node-url", default="http://127.0.0.1:8545", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def query_post(post_id, node_url, as_json):
    view = _get(node_url, f"/v1/posts/{post_id}")
    if as_json:
        click.echo(json.dumps(view, sort_keys=True))
    else:
        _emit({k: v for k, v in view.items() if k != "answers"}, as_json)
        click.echo(f"answers: {len(view['answers'])}")


@query.command("head")
@click.option("--node-url", default="http://127.0.0.1:8545", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def query_head(node_url, as_json):
    view = _get(node_url, "/v1/blocks/head")
    if as_json:
        click.echo(json.dumps(view, sort_keys=True))
    else:
        header = view["header"]
        _emit(
            {
                "height": header["height"],
                "hash": view["hash"],
                "timestamp": header["timestamp"],
                "proposer": header["proposer"],
                "state_root": header["state_root"],
                "transactions": len(view["transactions"]),
            },
            as_json,
        )


# -- simulator ----------------------------------------------------------------


@main.group()
def sim() -> None:
    """Deterministic network simulation."""


@sim.command("run")
@click.option("--scenario", type=click.Path(exists=True), required=True,
              help="JSON file: SimConfig fields plus duration_ms.")
@click.option("--out-trace", type=click.Path(dir_okay=False), required=True)
@click.option("--json", "as_json", is_flag=True)
def sim_run(scenario, out_trace, as_json):
    raw = json.loads(Path(scenario).read_text())
    duration_ms = int(raw.pop("duration_ms", 60_000))
    config = SimConfig.from_dict(raw)
    simulation = Simulation(config)
    simulation.run(duration_ms)
    Path(out_trace).write_text(simulation.trace.to_jsonl())
    heads = {n.head_hash.hex() for n in simulation.nodes}
    _emit(
        {
            "trace": out_trace,
            "events": len(simulation.trace.events),
            "heads": ",".join(sorted(heads)),
            "converged": len(heads) == 1,
        },
        as_json,
    )


if __name__ == "__main__":
    main()
