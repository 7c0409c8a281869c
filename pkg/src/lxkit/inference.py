"""Classification backends: remote chat-completion endpoint or the offline
lexicon, with retries, bounded concurrency, and token/cost accounting.

Wire shape (field names are part of the contract):
  request  {"model", "messages": [{"role", "content"}], "temperature"}
  response choices[0].message.content plus usage.prompt_tokens /
           usage.completion_tokens
"""
from __future__ import annotations

import json
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Optional, Sequence

import httpx

from .errors import BackendTimeout, HttpError, RetriesExhausted, Unparseable
from .instructions import InstructionRecord, fallback_label, parse_option_letter
from .lexicon import lexicon_classify
from .taxonomy import Taxonomy, default_taxonomy, lookup

# Backend credential env var; distinct from the service's own bearer token.
AUTH_TOKEN_ENV = "LX_BACKEND_TOKEN"


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "lexicon"  # "remote" or "lexicon"
    endpoint_url: str = ""
    model_name: str = ""
    auth_token: Optional[str] = None
    price_per_1m_input: float = 0.0
    price_per_1m_output: float = 0.0
    max_concurrency: int = 4
    timeout: float = 30.0
    max_retries: int = 3
    temperature: float = 0.0

    def __post_init__(self):
        if self.kind not in ("remote", "lexicon"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.price_per_1m_input < 0 or self.price_per_1m_output < 0:
            raise ValueError("prices must be non-negative")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be at least 1")

    def resolved_auth_token(self) -> Optional[str]:
        return self.auth_token or os.environ.get(AUTH_TOKEN_ENV)

    @classmethod
    def from_json(cls, text: str) -> "BackendConfig":
        raw = json.loads(text)
        return cls(**{k: raw[k] for k in raw if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class Usage:
    input_tokens: int = 0
    output_tokens: int = 0


@dataclass
class UsageLedger:
    input_tokens: int = 0
    output_tokens: int = 0
    total_cost: float = 0.0

    def add(self, usage: Usage, config: BackendConfig) -> None:
        self.input_tokens += usage.input_tokens
        self.output_tokens += usage.output_tokens
        self.total_cost = estimate_cost(
            self.input_tokens,
            self.output_tokens,
            config.price_per_1m_input,
            config.price_per_1m_output,
        )


@dataclass(frozen=True)
class Prediction:
    record_index: int
    perception_id: str
    label: Optional[str]
    raw_output: str = ""
    latency: float = 0.0
    attempt_count: int = 1
    error: Optional[str] = None
    usage: Usage = field(default_factory=Usage)


def estimate_cost(
    input_tokens: int, output_tokens: int, price_in: float, price_out: float
) -> float:
    """Exact dollar cost; round only for display."""
    if input_tokens < 0 or output_tokens < 0:
        raise ValueError("token counts must be non-negative")
    return input_tokens / 1e6 * price_in + output_tokens / 1e6 * price_out


def round_cents(value: float) -> Decimal:
    """Half-up rounding to cents, for display."""
    return Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def format_usd(value: float) -> str:
    return f"${round_cents(value)}"


# Local word-based token approximation for pre-flight estimates only; real
# accounting always uses the backend's usage report.
TOKENS_PER_WORD = 1.34


def estimate_tokens(text: str) -> int:
    return round(len(text.split()) * TOKENS_PER_WORD)


def scaling_cost(
    n_texts: int,
    input_tokens_per_text: float,
    output_tokens_per_text: float,
    price_in: float,
    price_out: float,
) -> float:
    """Pre-flight cost of classifying a corpus at assumed per-text token
    counts (e.g. 268 input / 16 output tokens per review)."""
    return estimate_cost(
        round(n_texts * input_tokens_per_text),
        round(n_texts * output_tokens_per_text),
        price_in,
        price_out,
    )


# -- backends ------------------------------------------------------------------

class LexiconBackend:
    """Offline deterministic backend; zero usage."""

    def __init__(self, config: BackendConfig, taxonomy: Optional[Taxonomy] = None):
        self.config = config
        self.taxonomy = taxonomy or default_taxonomy()

    def classify(self, record: InstructionRecord, record_index: int = 0) -> Prediction:
        start = time.perf_counter()
        perception = lookup(self.taxonomy, record.perception_id)
        label = lexicon_classify(record.input_text, perception, self.taxonomy)
        return Prediction(
            record_index=record_index,
            perception_id=record.perception_id,
            label=label,
            raw_output=label,
            latency=time.perf_counter() - start,
        )


RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})
BACKOFF_BASE_SECONDS = 0.5


class RemoteBackend:
    """Chat-completion client with exponential backoff and jitter.

    Retries only timeouts, 429, and 5xx; a request is a pure classification,
    so replaying it is safe. `client` and `sleeper` are injectable for tests.
    """

    def __init__(
        self,
        config: BackendConfig,
        client: Optional[httpx.Client] = None,
        sleeper: Callable[[float], None] = time.sleep,
        rng: Optional[random.Random] = None,
    ):
        self.config = config
        self._own_client = client is None
        self.client = client or httpx.Client(timeout=config.timeout)
        self.sleeper = sleeper
        self.rng = rng or random.Random()

    def close(self) -> None:
        if self._own_client:
            self.client.close()

    def _payload(self, record: InstructionRecord) -> dict:
        return {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": record.instruction_text},
                {"role": "user", "content": record.input_text},
            ],
            "temperature": self.config.temperature,
        }

    def _headers(self) -> dict:
        token = self.config.resolved_auth_token()
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def classify(
        self, record: InstructionRecord, record_index: int = 0, lenient: bool = False
    ) -> Prediction:
        start = time.perf_counter()
        payload = self._payload(record)
        last_error: Optional[Exception] = None
        attempts = 0
        for attempt in range(self.config.max_retries + 1):
            attempts = attempt + 1
            if attempt:
                backoff = BACKOFF_BASE_SECONDS * (2 ** (attempt - 1))
                self.sleeper(backoff + self.rng.uniform(0, backoff / 2))
            try:
                response = self.client.post(
                    self.config.endpoint_url, json=payload, headers=self._headers()
                )
            except httpx.TimeoutException as exc:
                last_error = BackendTimeout(str(exc))
                continue
            if response.status_code in RETRYABLE_STATUSES:
                last_error = HttpError(response.status_code, response.text[:200])
                continue
            if response.status_code >= 400:
                error = HttpError(response.status_code, response.text[:200])
                return Prediction(
                    record_index=record_index,
                    perception_id=record.perception_id,
                    label=None,
                    latency=time.perf_counter() - start,
                    attempt_count=attempts,
                    error=str(error),
                )
            body = response.json()
            content = body["choices"][0]["message"]["content"]
            usage_raw = body.get("usage", {})
            usage = Usage(
                input_tokens=int(usage_raw.get("prompt_tokens", 0)),
                output_tokens=int(usage_raw.get("completion_tokens", 0)),
            )
            try:
                label = parse_option_letter(content, record.options)
                error_text = None
            except Unparseable as exc:
                if lenient:
                    label = fallback_label(record.options)
                    error_text = None
                else:
                    label = None
                    error_text = str(exc)
            return Prediction(
                record_index=record_index,
                perception_id=record.perception_id,
                label=label,
                raw_output=content,
                latency=time.perf_counter() - start,
                attempt_count=attempts,
                error=error_text,
                usage=usage,
            )
        exhausted = RetriesExhausted(f"{attempts} attempts failed: {last_error}")
        return Prediction(
            record_index=record_index,
            perception_id=record.perception_id,
            label=None,
            latency=time.perf_counter() - start,
            attempt_count=attempts,
            error=str(exhausted),
        )


def make_backend(
    config: BackendConfig,
    taxonomy: Optional[Taxonomy] = None,
    client: Optional[httpx.Client] = None,
    sleeper: Callable[[float], None] = time.sleep,
):
    if config.kind == "lexicon":
        return LexiconBackend(config, taxonomy)
    return RemoteBackend(config, client=client, sleeper=sleeper)


def classify(
    record: InstructionRecord,
    backend: BackendConfig | LexiconBackend | RemoteBackend,
    record_index: int = 0,
    lenient: bool = False,
) -> tuple[Prediction, Usage]:
    """Classify one record; returns the prediction and its usage delta."""
    impl = make_backend(backend) if isinstance(backend, BackendConfig) else backend
    if isinstance(impl, LexiconBackend):
        prediction = impl.classify(record, record_index)
    else:
        prediction = impl.classify(record, record_index, lenient=lenient)
    return prediction, prediction.usage


def classify_batch(
    records: Sequence[InstructionRecord],
    backend: BackendConfig | LexiconBackend | RemoteBackend,
    lenient: bool = False,
) -> tuple[list[Prediction], UsageLedger]:
    """Classify records with at most max_concurrency requests in flight.

    Results come back in input order; per-record failures are embedded in
    their Prediction, never aborting the batch. The ledger is merged after
    completion (single writer)."""
    impl = make_backend(backend) if isinstance(backend, BackendConfig) else backend
    config = impl.config
    ledger = UsageLedger()
    if not records:
        return [], ledger

    def work(indexed: tuple[int, InstructionRecord]) -> Prediction:
        i, record = indexed
        prediction, _ = classify(record, impl, record_index=i, lenient=lenient)
        return prediction

    if config.max_concurrency == 1 or isinstance(impl, LexiconBackend):
        predictions = [work(item) for item in enumerate(records)]
    else:
        with ThreadPoolExecutor(max_workers=config.max_concurrency) as pool:
            predictions = list(pool.map(work, enumerate(records)))

    for p in predictions:
        ledger.add(p.usage, config)
    return predictions, ledger
