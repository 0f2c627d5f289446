"""Per-user accounts, bearer tokens, and anonymized interaction logs.

Backed by a single SQLite file. Login names and passwords are never stored in
plaintext: login names are salted-hashed with a per-store salt (so lookups
stay possible), passwords with PBKDF2 and a per-user salt. Tokens are stored
only as digests. Writes are serialized behind one lock and committed before
the caller gets its response back.
"""

from __future__ import annotations

import hashlib
import json
import secrets
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import AuthError, ConflictError, InputError, NotFoundError, SequencingError

TOKEN_TTL_SECONDS = 24 * 3600
PBKDF2_ITERATIONS = 50_000

_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS users (
    user_id TEXT PRIMARY KEY,
    username_digest TEXT UNIQUE NOT NULL,
    password_digest TEXT NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS tokens (
    token_digest TEXT PRIMARY KEY,
    user_id TEXT NOT NULL REFERENCES users(user_id),
    expires_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS interactions (
    record_id TEXT PRIMARY KEY,
    user_id TEXT NOT NULL REFERENCES users(user_id),
    session_id TEXT NOT NULL,
    turn_index INTEGER NOT NULL,
    question TEXT NOT NULL,
    rewritten TEXT NOT NULL,
    chunks_json TEXT NOT NULL,
    answer TEXT NOT NULL,
    verdict_json TEXT NOT NULL,
    created_at TEXT NOT NULL,
    UNIQUE(user_id, session_id, turn_index)
);
"""


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class UserAccount:
    user_id: str
    username_digest: str
    password_digest: str
    created_at: str


@dataclass
class InteractionRecord:
    user_id: str
    session_id: str
    turn_index: int
    question: str
    rewritten: str
    chunks: list[dict] = field(default_factory=list)
    answer: str = ""
    verdict: dict = field(default_factory=dict)
    record_id: str | None = None
    created_at: str | None = None


class SessionStore:
    def __init__(self, path: str | Path):
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.executescript(_SCHEMA)
        row = self._conn.execute("SELECT value FROM meta WHERE key='salt'").fetchone()
        if row is None:
            salt = secrets.token_hex(16)
            self._conn.execute("INSERT INTO meta(key, value) VALUES ('salt', ?)", (salt,))
            self._conn.commit()
        else:
            salt = row[0]
        self._salt = bytes.fromhex(salt)

    def close(self) -> None:
        self._conn.close()

    # -- credentials ------------------------------------------------------

    def _login_digest(self, login: str) -> str:
        return hashlib.sha256(self._salt + login.encode("utf-8")).hexdigest()

    @staticmethod
    def _hash_password(password: str) -> str:
        salt = secrets.token_bytes(16)
        digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, PBKDF2_ITERATIONS)
        return f"pbkdf2:sha256:{PBKDF2_ITERATIONS}${salt.hex()}${digest.hex()}"

    @staticmethod
    def _check_password(password: str, stored: str) -> bool:
        try:
            scheme, salt_hex, digest_hex = stored.split("$")
            iterations = int(scheme.rsplit(":", 1)[1])
        except (ValueError, IndexError):
            return False
        digest = hashlib.pbkdf2_hmac(
            "sha256", password.encode("utf-8"), bytes.fromhex(salt_hex), iterations
        )
        return secrets.compare_digest(digest.hex(), digest_hex)

    def create_user(self, login: str, password: str) -> UserAccount:
        if not login or not password:
            raise InputError("login and password must be non-empty")
        account = UserAccount(
            user_id=secrets.token_hex(16),
            username_digest=self._login_digest(login),
            password_digest=self._hash_password(password),
            created_at=_now_iso(),
        )
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO users VALUES (?, ?, ?, ?)",
                    (account.user_id, account.username_digest, account.password_digest, account.created_at),
                )
                self._conn.commit()
            except sqlite3.IntegrityError:
                raise ConflictError("login already exists") from None
        return account

    def authenticate(self, login: str, password: str) -> tuple[str, float]:
        """Issue an opaque bearer token; returns (token, unix expiry).

        Wrong login and wrong password are indistinguishable to the caller.
        """
        with self._lock:
            row = self._conn.execute(
                "SELECT user_id, password_digest FROM users WHERE username_digest = ?",
                (self._login_digest(login),),
            ).fetchone()
            if row is None or not self._check_password(password, row[1]):
                raise AuthError("invalid credentials")
            token = secrets.token_hex(16)
            expires_at = time.time() + TOKEN_TTL_SECONDS
            self._conn.execute(
                "INSERT INTO tokens VALUES (?, ?, ?)",
                (hashlib.sha256(token.encode()).hexdigest(), row[0], expires_at),
            )
            self._conn.commit()
        return token, expires_at

    def validate_token(self, token: str) -> str:
        digest = hashlib.sha256(token.encode()).hexdigest()
        with self._lock:
            row = self._conn.execute(
                "SELECT user_id, expires_at FROM tokens WHERE token_digest = ?", (digest,)
            ).fetchone()
        if row is None or row[1] < time.time():
            raise AuthError("invalid or expired token")
        return row[0]

    def ensure_user(self, login: str) -> str:
        """Find-or-create a local account (used by the no-auth CLI paths)."""
        with self._lock:
            row = self._conn.execute(
                "SELECT user_id FROM users WHERE username_digest = ?",
                (self._login_digest(login),),
            ).fetchone()
            if row is not None:
                return row[0]
        return self.create_user(login, secrets.token_hex(16)).user_id

    # -- learning log ------------------------------------------------------

    def _require_user(self, user_id: str) -> None:
        row = self._conn.execute("SELECT 1 FROM users WHERE user_id = ?", (user_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"unknown user {user_id!r}")

    def next_turn_index(self, user_id: str, session_id: str) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT MAX(turn_index) FROM interactions WHERE user_id = ? AND session_id = ?",
                (user_id, session_id),
            ).fetchone()
        return 0 if row[0] is None else row[0] + 1

    def append_interaction(self, record: InteractionRecord) -> str:
        with self._lock:
            self._require_user(record.user_id)
            row = self._conn.execute(
                "SELECT MAX(turn_index) FROM interactions WHERE user_id = ? AND session_id = ?",
                (record.user_id, record.session_id),
            ).fetchone()
            last = row[0]
            if last is not None and record.turn_index <= last:
                raise SequencingError(
                    f"turn_index {record.turn_index} not after {last} for session {record.session_id!r}"
                )
            record.record_id = secrets.token_hex(16)
            record.created_at = _now_iso()
            self._conn.execute(
                "INSERT INTO interactions VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    record.record_id,
                    record.user_id,
                    record.session_id,
                    record.turn_index,
                    record.question,
                    record.rewritten,
                    json.dumps(record.chunks, ensure_ascii=False),
                    record.answer,
                    json.dumps(record.verdict, ensure_ascii=False),
                    record.created_at,
                ),
            )
            # Durable before the caller can answer the request.
            self._conn.commit()
        return record.record_id

    @staticmethod
    def _row_to_record(row: tuple) -> InteractionRecord:
        return InteractionRecord(
            record_id=row[0],
            user_id=row[1],
            session_id=row[2],
            turn_index=row[3],
            question=row[4],
            rewritten=row[5],
            chunks=json.loads(row[6]),
            answer=row[7],
            verdict=json.loads(row[8]),
            created_at=row[9],
        )

    def history(self, user_id: str, limit: int = 20, offset: int = 0) -> list[InteractionRecord]:
        """Newest-first page of a user's interactions."""
        if limit < 0 or offset < 0:
            raise InputError("limit and offset must be non-negative")
        with self._lock:
            self._require_user(user_id)
            rows = self._conn.execute(
                "SELECT record_id, user_id, session_id, turn_index, question, rewritten,"
                " chunks_json, answer, verdict_json, created_at"
                " FROM interactions WHERE user_id = ? ORDER BY rowid DESC LIMIT ? OFFSET ?",
                (user_id, limit, offset),
            ).fetchall()
        return [self._row_to_record(r) for r in rows]

    def session_records(self, user_id: str, session_id: str) -> list[InteractionRecord]:
        """All records of one session, oldest first (conversation order)."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT record_id, user_id, session_id, turn_index, question, rewritten,"
                " chunks_json, answer, verdict_json, created_at"
                " FROM interactions WHERE user_id = ? AND session_id = ? ORDER BY turn_index ASC",
                (user_id, session_id),
            ).fetchall()
        return [self._row_to_record(r) for r in rows]

    def export_interactions(self, out_path: str | Path) -> int:
        """Dump every interaction as newline-delimited JSON; returns the count."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT record_id, user_id, session_id, turn_index, question, rewritten,"
                " chunks_json, answer, verdict_json, created_at FROM interactions ORDER BY rowid"
            ).fetchall()
        with open(out_path, "w", encoding="utf-8") as fh:
            for r in rows:
                rec = self._row_to_record(r)
                fh.write(
                    json.dumps(
                        {
                            "record_id": rec.record_id,
                            "user_id": rec.user_id,
                            "session_id": rec.session_id,
                            "turn_index": rec.turn_index,
                            "question": rec.question,
                            "rewritten": rec.rewritten,
                            "chunks": rec.chunks,
                            "answer": rec.answer,
                            "verdict": rec.verdict,
                            "created_at": rec.created_at,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        return len(rows)
