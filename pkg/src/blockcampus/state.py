"""The deterministic application state machine.

WorldState holds accounts, communities, posts, votes, staff ratings,
services, and the token ledger. apply_transaction is the single entry point
for mutation: it either returns a fresh state plus an event list, or raises
ChainError leaving the input state untouched. Blocks fold apply_transaction
over their transactions; a block containing any invalid transaction is
invalid in toto, so committed history replays without failure branches.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from . import econ
from .codec import hash_of
from .econ import EconParams
from .keys import address_from_hex, address_to_hex, derive_address, verify
from .ledger import Block, ChainError, SignedTransaction, verify_tx_signature

ROLE_STUDENT = "Student"
ROLE_TA = "TA"
ROLE_PROFESSOR = "Professor"
ROLE_ADMIN = "Admin"
ROLE_OWNER = "Owner"
ROLES = (ROLE_STUDENT, ROLE_TA, ROLE_PROFESSOR, ROLE_ADMIN, ROLE_OWNER)
STAFF_ROLES = {ROLE_TA, ROLE_PROFESSOR}
MODERATOR_ROLES = {ROLE_ADMIN, ROLE_OWNER}
COMMUNITY_CREATOR_ROLES = STAFF_ROLES | MODERATOR_ROLES

QUESTION = "Question"
ANSWER = "Answer"

TX_KINDS = (
    "RegisterUser",
    "GrantRole",
    "RevokeRole",
    "CreateCommunity",
    "JoinCommunity",
    "PostQuestion",
    "PostAnswer",
    "Vote",
    "StaffRate",
    "GiveAward",
    "TransferTofu",
    "CreateService",
    "RedeemService",
    "FlagContent",
    "DeactivateAccount",
)


@dataclass
class Account:
    address: bytes
    pubkey: bytes
    username: str
    role: str
    nonce: int = 0
    bateekh: int = 0
    earned_lifetime: int = 0
    tofu: int = 0
    active: bool = True
    communities: set = field(default_factory=set)

    def to_view(self) -> dict:
        return {
            "address": address_to_hex(self.address),
            "pubkey": self.pubkey.hex(),
            "username": self.username,
            "role": self.role,
            "nonce": self.nonce,
            "bateekh": self.bateekh,
            "earned_lifetime": self.earned_lifetime,
            "tofu": self.tofu,
            "active": self.active,
            "communities": sorted(self.communities),
        }


@dataclass
class Post:
    id: bytes  # hash of the creating transaction
    kind: str  # Question | Answer
    author: bytes
    community: str  # community id for questions, parent question hex id for answers
    title: str
    body_cid: str
    created_height: int
    up: int = 0
    down: int = 0
    ratings: dict = field(default_factory=dict)  # rater hex address -> star
    awards: int = 0
    hidden: bool = False

    def to_view(self) -> dict:
        return {
            "id": self.id.hex(),
            "kind": self.kind,
            "author": address_to_hex(self.author),
            "community": self.community,
            "title": self.title,
            "body_cid": self.body_cid,
            "created_height": self.created_height,
            "up": self.up,
            "down": self.down,
            "ratings": dict(sorted(self.ratings.items())),
            "awards": self.awards,
            "hidden": self.hidden,
        }

    def score(self) -> int:
        return econ.rank_score(self.up, self.down, self.ratings)


@dataclass
class TokenLedger:
    rewards_pool: int
    treasury: int
    dev_fund: int
    burned: int = 0

    def to_view(self) -> dict:
        return dict(self.__dict__)


@dataclass
class WorldState:
    chain_id: str
    params: EconParams
    accounts: dict = field(default_factory=dict)  # address bytes -> Account
    communities: dict = field(default_factory=dict)  # id -> {"name","creator"}
    posts: dict = field(default_factory=dict)  # id bytes -> Post
    votes: set = field(default_factory=set)  # (voter bytes, post id bytes, dir)
    services: dict = field(default_factory=dict)  # id -> {"name","price"}
    ledger: TokenLedger = None  # type: ignore[assignment]
    height_applied: int = 0

    def __post_init__(self) -> None:
        if self.ledger is None:
            self.ledger = TokenLedger(
                rewards_pool=self.params.genesis_rewards_pool,
                treasury=self.params.genesis_treasury,
                dev_fund=self.params.genesis_dev_fund,
            )

    def clone(self) -> "WorldState":
        return copy.deepcopy(self)

    def account_by_hex(self, addr_hex: str) -> Account | None:
        return self.accounts.get(address_from_hex(addr_hex))

    def total_tofu(self) -> int:
        led = self.ledger
        return (
            led.rewards_pool
            + led.treasury
            + led.dev_fund
            + led.burned
            + sum(a.tofu for a in self.accounts.values())
        )

    def to_view(self) -> dict:
        """Full canonical rendering; maps become key-sorted pair lists."""
        return {
            "chain_id": self.chain_id,
            "height_applied": self.height_applied,
            "params": self.params.to_dict(),
            "accounts": [
                [address_to_hex(a), self.accounts[a].to_view()]
                for a in sorted(self.accounts)
            ],
            "communities": [
                [cid, dict(self.communities[cid])] for cid in sorted(self.communities)
            ],
            "posts": [
                [p.hex(), self.posts[p].to_view()] for p in sorted(self.posts)
            ],
            "votes": sorted(
                [address_to_hex(v), p.hex(), d] for v, p, d in self.votes
            ),
            "services": [
                [sid, dict(self.services[sid])] for sid in sorted(self.services)
            ],
            "ledger": self.ledger.to_view(),
        }


def state_root(state: WorldState) -> bytes:
    return hash_of(state.to_view())


def registration_digest(
    chain_id: str, sender_pubkey: bytes, username: str, role: str
) -> bytes:
    """What the approving admin co-signs to enroll a new account."""
    return hash_of(
        {
            "chain_id": chain_id,
            "kind": "RegisterUser",
            "sender_pubkey": sender_pubkey,
            "username": username,
            "role": role,
        }
    )


# ---------------------------------------------------------------------------
# Bateekh / Tofu primitives
# ---------------------------------------------------------------------------

def credit_bateekh(
    state: WorldState, recipient: bytes, delta: int, events: list
) -> None:
    """Credit reputation and mint Tofu for each lifetime-threshold crossing,
    capped by what remains in the rewards pool."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    acct = state.accounts.get(recipient)
    if acct is None:
        raise ChainError("UnknownEntity", "credit target missing")
    if not acct.active:
        raise ChainError("InactiveAccount", address_to_hex(recipient))
    p = state.params
    before = acct.earned_lifetime
    acct.bateekh += delta
    acct.earned_lifetime += delta
    crossings = acct.earned_lifetime // p.mint_threshold - before // p.mint_threshold
    if crossings > 0:
        mint = min(crossings * p.mint_amount, state.ledger.rewards_pool)
        if mint > 0:
            state.ledger.rewards_pool -= mint
            acct.tofu += mint
            events.append(
                {
                    "event": "TofuMinted",
                    "to": address_to_hex(recipient),
                    "amount": mint,
                }
            )


def debit_bateekh(state: WorldState, target: bytes, delta: int) -> None:
    if delta < 0:
        raise ValueError("delta must be non-negative")
    acct = state.accounts.get(target)
    if acct is None:
        raise ChainError("UnknownEntity", "debit target missing")
    acct.bateekh = max(0, acct.bateekh - delta)


# ---------------------------------------------------------------------------
# Transaction application
# ---------------------------------------------------------------------------

def apply_transaction(
    state: WorldState, tx: SignedTransaction, height: int
) -> tuple[WorldState, list]:
    """Apply one transaction, returning (new state, events).

    Raises ChainError on any rule violation; the input state is never
    modified in that case.
    """
    if tx.kind not in TX_KINDS:
        raise ChainError("UnknownEntity", f"unknown tx kind {tx.kind!r}")
    if tx.chain_id != state.chain_id:
        raise ChainError("BadSignature", "wrong chain_id")
    if not verify_tx_signature(tx):
        raise ChainError("BadSignature", tx.tx_hash().hex())

    new = state.clone()
    events: list = []
    sender_addr = tx.sender
    sender = new.accounts.get(sender_addr)

    if tx.kind == "RegisterUser":
        if sender is not None:
            raise ChainError("Unauthorized", "account already registered")
        if tx.nonce != 0:
            raise ChainError("BadNonce", "registration nonce must be 0")
        _register_user(new, tx, events)
    else:
        if sender is None:
            raise ChainError("UnknownEntity", "unknown sender account")
        if not sender.active:
            raise ChainError("InactiveAccount", address_to_hex(sender_addr))
        if tx.nonce != sender.nonce:
            raise ChainError(
                "BadNonce", f"expected {sender.nonce}, got {tx.nonce}"
            )
        _KIND_HANDLERS[tx.kind](new, sender, tx, height, events)

    # Successful txs always consume the nonce, even when the effect is a no-op.
    new.accounts[sender_addr].nonce = tx.nonce + 1
    return new, events


def _payload_str(tx: SignedTransaction, key: str) -> str:
    v = tx.payload.get(key)
    if not isinstance(v, str):
        raise ChainError("UnknownEntity", f"missing/invalid field {key!r}")
    return v


def _payload_int(tx: SignedTransaction, key: str) -> int:
    v = tx.payload.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ChainError("UnknownEntity", f"missing/invalid field {key!r}")
    return v


def _register_user(state: WorldState, tx: SignedTransaction, events: list) -> None:
    username = _payload_str(tx, "username")
    role = _payload_str(tx, "role")
    if role not in ROLES or role == ROLE_OWNER:
        raise ChainError("Unauthorized", f"cannot register with role {role!r}")
    admin_pubkey = bytes.fromhex(_payload_str(tx, "admin_pubkey"))
    admin_sig = bytes.fromhex(_payload_str(tx, "admin_sig"))
    admin = state.accounts.get(derive_address(admin_pubkey))
    if admin is None or not admin.active or admin.role not in MODERATOR_ROLES:
        raise ChainError("Unauthorized", "co-signer is not an active admin")
    digest = registration_digest(tx.chain_id, tx.sender_pubkey, username, role)
    if not verify(admin_pubkey, admin_sig, digest):
        raise ChainError("Unauthorized", "bad admin co-signature")
    addr = tx.sender
    state.accounts[addr] = Account(
        address=addr,
        pubkey=tx.sender_pubkey,
        username=username,
        role=role,
        bateekh=state.params.initial_bateekh,
    )
    events.append(
        {"event": "Registered", "address": address_to_hex(addr), "role": role}
    )


def _grant_role(state, sender, tx, height, events) -> None:
    target = state.account_by_hex(_payload_str(tx, "target"))
    role = _payload_str(tx, "role")
    if target is None:
        raise ChainError("UnknownEntity", "unknown target account")
    if role == ROLE_OWNER or role not in ROLES:
        raise ChainError("Unauthorized", f"cannot grant role {role!r}")
    if role == ROLE_ADMIN:
        if sender.role != ROLE_OWNER:
            raise ChainError("Unauthorized", "only Owner grants Admin")
    else:
        if sender.role not in MODERATOR_ROLES:
            raise ChainError("Unauthorized", "only Admin/Owner grant roles")
    if target.role == ROLE_OWNER:
        raise ChainError("Unauthorized", "cannot change Owner role")
    target.role = role


def _revoke_role(state, sender, tx, height, events) -> None:
    target = state.account_by_hex(_payload_str(tx, "target"))
    if target is None:
        raise ChainError("UnknownEntity", "unknown target account")
    if target.role == ROLE_OWNER:
        raise ChainError("Unauthorized", "cannot revoke Owner")
    # Revoking a role needs the same authority as granting it.
    if target.role == ROLE_ADMIN:
        if sender.role != ROLE_OWNER:
            raise ChainError("Unauthorized", "only Owner revokes Admin")
    else:
        if sender.role not in MODERATOR_ROLES:
            raise ChainError("Unauthorized", "only Admin/Owner revoke roles")
    target.role = ROLE_STUDENT


def _create_community(state, sender, tx, height, events) -> None:
    if sender.role not in COMMUNITY_CREATOR_ROLES:
        raise ChainError("Unauthorized", "students cannot create communities")
    cid = _payload_str(tx, "id")
    if cid in state.communities:
        raise ChainError("Unauthorized", f"community {cid!r} already exists")
    state.communities[cid] = {
        "name": _payload_str(tx, "name"),
        "creator": address_to_hex(sender.address),
    }
    sender.communities.add(cid)


def _join_community(state, sender, tx, height, events) -> None:
    cid = _payload_str(tx, "id")
    if cid not in state.communities:
        raise ChainError("UnknownEntity", f"unknown community {cid!r}")
    if cid in sender.communities:
        raise ChainError("AlreadyMember", cid)
    sender.communities.add(cid)


def _post_question(state, sender, tx, height, events) -> None:
    cid = _payload_str(tx, "community")
    if cid not in state.communities:
        raise ChainError("UnknownEntity", f"unknown community {cid!r}")
    if cid not in sender.communities:
        raise ChainError("Unauthorized", "must join community before posting")
    post_id = tx.tx_hash()
    state.posts[post_id] = Post(
        id=post_id,
        kind=QUESTION,
        author=sender.address,
        community=cid,
        title=_payload_str(tx, "title"),
        body_cid=_payload_str(tx, "cid"),
        created_height=height,
    )


def _post_answer(state, sender, tx, height, events) -> None:
    qid_hex = _payload_str(tx, "question_id")
    question = state.posts.get(bytes.fromhex(qid_hex))
    if question is None or question.kind != QUESTION:
        raise ChainError("UnknownEntity", f"unknown question {qid_hex}")
    if question.hidden:
        raise ChainError("HiddenContent", qid_hex)
    post_id = tx.tx_hash()
    state.posts[post_id] = Post(
        id=post_id,
        kind=ANSWER,
        author=sender.address,
        community=qid_hex,
        title="",
        body_cid=_payload_str(tx, "cid"),
        created_height=height,
    )


def _vote(state, sender, tx, height, events) -> None:
    post = _existing_visible_post(state, _payload_str(tx, "post_id"))
    direction = _payload_str(tx, "direction")
    if direction not in ("up", "down"):
        raise ChainError("UnknownEntity", f"bad direction {direction!r}")
    if post.author == sender.address:
        raise ChainError("SelfVote", post.id.hex())
    if any(v == sender.address and p == post.id for v, p, _ in state.votes):
        raise ChainError("AlreadyVoted", post.id.hex())
    state.votes.add((sender.address, post.id, direction))
    p = state.params
    if direction == "up":
        post.up += 1
        delta = econ.vote_delta(
            p.base_upvote,
            econ.voter_weight(sender.bateekh, p),
            econ.age_decay(height - post.created_height, p),
            econ.staff_multiplier(post.ratings, p),
        )
        credit_bateekh(state, post.author, delta, events)
    else:
        post.down += 1
        debit_bateekh(state, post.author, p.base_downvote)


def _staff_rate(state, sender, tx, height, events) -> None:
    if sender.role not in STAFF_ROLES:
        raise ChainError("Unauthorized", "only TA/Professor may rate")
    post = _existing_visible_post(state, _payload_str(tx, "post_id"))
    if post.kind != ANSWER:
        raise ChainError("Unauthorized", "only answers can be rated")
    stars = _payload_int(tx, "stars")
    if not 1 <= stars <= 5:
        raise ChainError("UnknownEntity", f"stars out of range: {stars}")
    rater_hex = address_to_hex(sender.address)
    if rater_hex in post.ratings:
        raise ChainError("AlreadyRated", post.id.hex())
    post.ratings[rater_hex] = stars
    credit_bateekh(state, post.author, state.params.rate_grant * stars, events)


def _give_award(state, sender, tx, height, events) -> None:
    post = _existing_visible_post(state, _payload_str(tx, "post_id"))
    if post.author == sender.address:
        raise ChainError("SelfVote", "cannot award own post")
    p = state.params
    if sender.tofu < p.award_cost:
        raise ChainError("InsufficientTofu", f"have {sender.tofu}, need {p.award_cost}")
    author = state.accounts[post.author]
    if not author.active:
        raise ChainError("InactiveAccount", address_to_hex(post.author))
    sender.tofu -= p.award_cost
    author.tofu += p.award_to_recipient
    state.ledger.burned += p.award_burn
    post.awards += 1
    credit_bateekh(state, post.author, p.award_bateekh, events)
    events.append(
        {
            "event": "Awarded",
            "post": post.id.hex(),
            "from": address_to_hex(sender.address),
            "to": address_to_hex(post.author),
        }
    )


def _transfer_tofu(state, sender, tx, height, events) -> None:
    target = state.account_by_hex(_payload_str(tx, "to"))
    amount = _payload_int(tx, "amount")
    if target is None:
        raise ChainError("UnknownEntity", "unknown recipient")
    if amount < 1:
        raise ChainError("UnknownEntity", f"bad amount {amount}")
    if not target.active:
        raise ChainError("InactiveAccount", "recipient inactive")
    if sender.tofu < amount:
        raise ChainError("InsufficientTofu", f"have {sender.tofu}, need {amount}")
    sender.tofu -= amount
    target.tofu += amount


def _create_service(state, sender, tx, height, events) -> None:
    if sender.role not in MODERATOR_ROLES:
        raise ChainError("Unauthorized", "only Admin/Owner create services")
    sid = _payload_str(tx, "id")
    price = _payload_int(tx, "price")
    if sid in state.services:
        raise ChainError("Unauthorized", f"service {sid!r} already exists")
    if price < 1:
        raise ChainError("UnknownEntity", f"bad price {price}")
    state.services[sid] = {"name": _payload_str(tx, "name"), "price": price}


def _redeem_service(state, sender, tx, height, events) -> None:
    sid = _payload_str(tx, "service_id")
    service = state.services.get(sid)
    if service is None:
        raise ChainError("UnknownEntity", f"unknown service {sid!r}")
    price = service["price"]
    if sender.tofu < price:
        raise ChainError("InsufficientTofu", f"have {sender.tofu}, need {price}")
    burn, to_treasury = econ.redeem_split(price)
    sender.tofu -= price
    state.ledger.burned += burn
    state.ledger.treasury += to_treasury
    events.append(
        {
            "event": "Redeemed",
            "service": sid,
            "by": address_to_hex(sender.address),
            "price": price,
            "burned": burn,
        }
    )


def _flag_content(state, sender, tx, height, events) -> None:
    if sender.role not in MODERATOR_ROLES:
        raise ChainError("Unauthorized", "only Admin/Owner flag content")
    post = _existing_visible_post(state, _payload_str(tx, "post_id"))
    post.hidden = True
    debit_bateekh(state, post.author, state.params.flag_penalty)
    events.append(
        {
            "event": "Flagged",
            "post": post.id.hex(),
            "reason": _payload_str(tx, "reason"),
        }
    )


def _deactivate_account(state, sender, tx, height, events) -> None:
    target = state.account_by_hex(_payload_str(tx, "target"))
    if target is None:
        raise ChainError("UnknownEntity", "unknown target account")
    if target.address != sender.address and sender.role not in MODERATOR_ROLES:
        raise ChainError("Unauthorized", "may only deactivate self")
    if not target.active:
        raise ChainError("InactiveAccount", "already inactive")
    burned = target.tofu
    state.ledger.burned += burned
    target.tofu = 0
    target.active = False
    events.append(
        {
            "event": "AccountDeactivated",
            "address": address_to_hex(target.address),
            "tofu_burned": burned,
        }
    )


def _existing_visible_post(state: WorldState, post_id_hex: str) -> Post:
    try:
        post = state.posts.get(bytes.fromhex(post_id_hex))
    except ValueError:
        post = None
    if post is None:
        raise ChainError("UnknownEntity", f"unknown post {post_id_hex}")
    if post.hidden:
        raise ChainError("HiddenContent", post_id_hex)
    return post


_KIND_HANDLERS = {
    "GrantRole": _grant_role,
    "RevokeRole": _revoke_role,
    "CreateCommunity": _create_community,
    "JoinCommunity": _join_community,
    "PostQuestion": _post_question,
    "PostAnswer": _post_answer,
    "Vote": _vote,
    "StaffRate": _staff_rate,
    "GiveAward": _give_award,
    "TransferTofu": _transfer_tofu,
    "CreateService": _create_service,
    "RedeemService": _redeem_service,
    "FlagContent": _flag_content,
    "DeactivateAccount": _deactivate_account,
}


def apply_block(state: WorldState, block: Block) -> tuple[WorldState, list]:
    """Fold a block's transactions over the state; all must succeed."""
    current = state
    all_events: list = []
    for tx in block.transactions:
        try:
            current, events = apply_transaction(current, tx, block.header.height)
        except ChainError as e:
            raise ChainError(
                "InvalidTxInBlock", f"{tx.tx_hash().hex()}: {e}"
            ) from e
        all_events.extend(events)
    if current is state:
        current = state.clone()
    current.height_applied = block.header.height
    if state_root(current) != block.header.state_root:
        raise ChainError("StateRootMismatch", f"height {block.header.height}")
    return current, all_events
