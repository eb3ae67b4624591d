"""HTTP JSON gateway over a single node.

All reads are served from the node's committed head; the only mutating
endpoint is POST /v1/transactions, which funnels through the node's normal
admission path. The service never holds user secrets — transactions arrive
already signed.
"""

from __future__ import annotations

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .content import MAX_BLOB_SIZE, TooLarge, is_valid_cid
from .ledger import SignedTransaction
from .node import Node


def _block_view(block) -> dict:
    return {
        "hash": block.block_hash().hex(),
        "header": block.header.to_dict(),
        "transactions": [
            tx.to_dict() | {"tx_hash": tx.tx_hash().hex()}
            for tx in block.transactions
        ],
    }


def _not_found(what: str) -> JSONResponse:
    return JSONResponse({"error": f"unknown {what}"}, status_code=404)


def create_app(node: Node) -> FastAPI:
    app = FastAPI(title="blockcampus", docs_url=None, redoc_url=None)
    app.state.node = node

    # -- transactions --------------------------------------------------------

    @app.post("/v1/transactions")
    async def submit_transaction(request: Request):
        try:
            tx = SignedTransaction.from_dict(await request.json())
        except Exception:
            return JSONResponse(
                {"status": "rejected", "reason": "Malformed"}, status_code=400
            )
        reason = node.submit_tx(tx)
        if reason is not None:
            return JSONResponse(
                {"status": "rejected", "reason": reason}, status_code=400
            )
        return {"tx_hash": tx.tx_hash().hex(), "status": "accepted"}

    @app.get("/v1/mempool")
    def mempool():
        return {
            "size": len(node.mempool),
            "tx_hashes": [tx.tx_hash().hex() for tx in node.mempool],
        }

    # -- blocks --------------------------------------------------------------

    @app.get("/v1/blocks/head")
    def head():
        return _block_view(node.head)

    @app.get("/v1/blocks/height/{height}")
    def block_by_height(height: int):
        block = node.block_at_height(height) if height >= 0 else None
        if block is None:
            return _not_found("height")
        return _block_view(block)

    @app.get("/v1/blocks/{block_hash}")
    def block_by_hash(block_hash: str):
        try:
            h = bytes.fromhex(block_hash)
        except ValueError:
            return _not_found("block")
        block = node.blocks.get(h)
        if block is None:
            return _not_found("block")
        return _block_view(block)

    # -- state views ---------------------------------------------------------

    @app.get("/v1/accounts/{address}")
    def account(address: str):
        acct = node.head_state.account_by_hex(address)
        if acct is None:
            return _not_found("account")
        return acct.to_view()

    @app.get("/v1/communities")
    def communities():
        state = node.head_state
        return [
            {"id": cid} | dict(state.communities[cid])
            for cid in sorted(state.communities)
        ]

    @app.get("/v1/communities/{community_id}/posts")
    def community_posts(
        community_id: str, sort: str = "top", limit: int = 50, offset: int = 0
    ):
        state = node.head_state
        if community_id not in state.communities:
            return _not_found("community")
        if sort not in ("top", "new") or limit < 0 or offset < 0:
            return JSONResponse({"error": "bad query"}, status_code=400)
        questions = [
            p
            for p in state.posts.values()
            if p.kind == "Question" and p.community == community_id and not p.hidden
        ]
        if sort == "top":
            # rank desc, ties go to the newer post
            questions.sort(
                key=lambda p: (-p.score(), -p.created_height, p.id)
            )
        else:
            questions.sort(key=lambda p: (-p.created_height, p.id))
        page = questions[offset : offset + limit]
        return [p.to_view() | {"rank_score": p.score()} for p in page]

    @app.get("/v1/posts/{post_id}")
    def post(post_id: str):
        state = node.head_state
        try:
            pid = bytes.fromhex(post_id)
        except ValueError:
            return _not_found("post")
        entry = state.posts.get(pid)
        if entry is None:
            return _not_found("post")
        answers = sorted(
            (
                p
                for p in state.posts.values()
                if p.kind == "Answer" and p.community == post_id
            ),
            key=lambda p: (p.created_height, p.id),
        )
        return entry.to_view() | {
            "rank_score": entry.score(),
            "answers": [a.to_view() | {"rank_score": a.score()} for a in answers],
        }

    # -- content -------------------------------------------------------------

    @app.post("/v1/content")
    async def put_content(request: Request):
        data = await request.body()
        if len(data) > MAX_BLOB_SIZE:
            return JSONResponse({"error": "content too large"}, status_code=400)
        try:
            cid = node.blobs.put(data)
        except TooLarge:
            return JSONResponse({"error": "content too large"}, status_code=400)
        return {"cid": cid}

    @app.get("/v1/content/{cid}")
    def get_content(cid: str):
        if not is_valid_cid(cid):
            return _not_found("content")
        data = node.blobs.get(cid)
        if data is None:
            return _not_found("content")
        return Response(content=data, media_type="application/octet-stream")

    # -- chain metadata ------------------------------------------------------

    @app.get("/v1/chain/params")
    def chain_params():
        return {
            "chain_id": node.genesis.chain_id,
            "consensus": node.genesis.consensus.to_dict(),
            "econ": node.genesis.econ.to_dict(),
            "validators": [v.hex() for v in node.genesis.validators],
            "head_height": node.head_height,
            "head_state_root": node.head_state_root().hex(),
        }

    # -- peer wire (used by `node run` for HTTP gossip) ----------------------

    @app.post("/v1/p2p")
    async def p2p(request: Request):
        msg = await request.json()
        sender = request.headers.get("x-node-id", "peer")
        node.receive(msg, sender=sender)
        return {"ok": True}

    return app
