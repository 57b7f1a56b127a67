# -*- coding: utf-8 -*-
import dataclasses
import enum
import hashlib
import json
import logging
import os
import random
import tempfile
import threading
import time
from typing import Any, Callable, Dict, Mapping, Optional

import requests

from .errors import ConfigurationError, LengthMismatch, ReplayMissError, SchemaViolation, TransportError
from .prompts import Phase, as_phase, render_prompt, TEXT_PHASES
from .schemas import parse_strict_json

logger = logging.getLogger('django_review_bench.judge')

GEMINI_ENDPOINT = 'https://generativelanguage.googleapis.com/v1beta'
OPENAI_ENDPOINT = 'https://api.openai.com/v1'


class CacheMode(str, enum.Enum):
    Record = 'record'
    Replay = 'replay'
    Passthrough = 'passthrough'


@dataclasses.dataclass(frozen=True)
class DecodeParams:
    temperature: float = 0.0
    top_p: float = 0.95

    def to_dict(self) -> Dict[str, float]:
        return {'temperature': self.temperature, 'top_p': self.top_p}


@dataclasses.dataclass(frozen=True)
class JudgeRequest:
    phase: Phase
    slots: Mapping[str, str]
    params: DecodeParams = DecodeParams()

    def __post_init__(self):
        object.__setattr__(self, 'phase', as_phase(self.phase))
        object.__setattr__(self, 'slots', dict(self.slots))

    def render(self) -> str:
        return render_prompt(self.phase, self.slots)

    def digest(self, backend_id: str) -> str:
        return request_digest(self.phase, self.slots, self.params, backend_id)


@dataclasses.dataclass(frozen=True)
class Provenance:
    backend: str
    cache_hit: bool
    digest: str


@dataclasses.dataclass(frozen=True)
class JudgeResponse:
    raw_text: str
    parsed: Optional[Dict[str, Any]]
    provenance: Provenance


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(',', ':'))


def request_digest(phase, slots: Mapping[str, str], params: DecodeParams, backend_id: str) -> str:
    payload = {
        'phase': as_phase(phase).value,
        'slots': [[k, slots[k]] for k in sorted(slots)],
        'params': params.to_dict(),
        'backend': backend_id,
    }
    return hashlib.sha256(canonical_json(payload).encode('utf-8')).hexdigest()


def atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(path) or '.'
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-')
    try:
        with os.fdopen(fd, 'wb') as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ReplayStore:
    """
    Content-addressed transcript cache: one ``<digest>.txt`` file holding the
    raw response bytes plus a ``<digest>.json`` metadata sidecar.

    Reads are lock-free, writes are serialized and atomic.
    """

    def __init__(self, directory: str, mode=CacheMode.Record):
        self.directory = directory
        self.mode = CacheMode(mode)
        self._write_lock = threading.Lock()
        if self.mode != CacheMode.Passthrough:
            os.makedirs(directory, exist_ok=True)

    def __repr__(self):
        return f"ReplayStore({self.directory!r}, mode={self.mode.value})"

    def _raw_path(self, digest: str) -> str:
        return os.path.join(self.directory, f"{digest}.txt")

    def _meta_path(self, digest: str) -> str:
        return os.path.join(self.directory, f"{digest}.json")

    def __contains__(self, digest: str) -> bool:
        return os.path.exists(self._raw_path(digest))

    def get(self, digest: str) -> Optional[str]:
        try:
            with open(self._raw_path(digest), 'rb') as fh:
                return fh.read().decode('utf-8')
        except FileNotFoundError:
            return None

    def metadata(self, digest: str) -> Optional[Dict[str, Any]]:
        try:
            with open(self._meta_path(digest), 'r', encoding='utf-8') as fh:
                return json.load(fh)
        except FileNotFoundError:
            return None

    def put(self, digest: str, raw_text: str, metadata: Optional[Dict[str, Any]] = None) -> None:
        with self._write_lock:
            atomic_write(self._raw_path(digest), raw_text.encode('utf-8'))
            meta = dict(metadata or {}, digest=digest)
            atomic_write(self._meta_path(digest), (canonical_json(meta) + '\n').encode('utf-8'))

    def digests(self):
        if not os.path.isdir(self.directory):
            return []
        return sorted(name[:-4] for name in os.listdir(self.directory) if name.endswith('.txt'))


@dataclasses.dataclass(frozen=True)
class BackendReply:
    text: str
    total_tokens: int = 0


class JudgeBackend:
    """HTTP judge endpoint. ``identity`` is the model name string that enters every digest."""

    identity: str = ''

    def generate(self, prompt: str, request: JudgeRequest) -> BackendReply:
        raise NotImplementedError('Subclasses must implement generate()')


def _post_json(session, url: str, payload: dict, headers: dict, timeout: float) -> dict:
    try:
        resp = session.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as e:
        raise TransportError(f"Judge transport failure: {e}") from e
    if resp.status_code == 429 or resp.status_code >= 500:
        raise TransportError(f"Judge endpoint answered {resp.status_code}", status_code=resp.status_code)
    if resp.status_code >= 400:
        raise TransportError(f"Judge endpoint rejected the request ({resp.status_code}): {resp.text[:200]}",
                             status_code=resp.status_code, transient=False)
    try:
        return resp.json()
    except ValueError as e:
        raise TransportError(f"Judge endpoint returned a non-JSON body: {e}") from e


class GeminiBackend(JudgeBackend):
    def __init__(self, model: str, api_key: str, endpoint: str = GEMINI_ENDPOINT,
                 session: Optional[requests.Session] = None, timeout: float = 120.0):
        self.identity = model
        self.model = model
        self.api_key = api_key
        self.endpoint = endpoint.rstrip('/')
        self.session = session or requests.Session()
        self.timeout = timeout

    def generate(self, prompt: str, request: JudgeRequest) -> BackendReply:
        generation_config = {
            'temperature': request.params.temperature,
            'topP': request.params.top_p,
        }
        if request.phase not in TEXT_PHASES:
            generation_config['responseMimeType'] = 'application/json'
        payload = {
            'contents': [{'role': 'user', 'parts': [{'text': prompt}]}],
            'generationConfig': generation_config,
        }
        data = _post_json(self.session, f"{self.endpoint}/models/{self.model}:generateContent", payload,
                          {'x-goog-api-key': self.api_key}, self.timeout)
        try:
            parts = data['candidates'][0]['content']['parts']
        except (KeyError, IndexError, TypeError):
            raise TransportError(f"Judge response carried no candidates: {str(data)[:200]}", transient=False)
        text = ''.join(p.get('text', '') for p in parts)
        tokens = int((data.get('usageMetadata') or {}).get('totalTokenCount') or 0)
        return BackendReply(text=text, total_tokens=tokens)


class OpenAICompatibleBackend(JudgeBackend):
    def __init__(self, model: str, api_key: str, endpoint: str = OPENAI_ENDPOINT,
                 session: Optional[requests.Session] = None, timeout: float = 120.0):
        self.identity = model
        self.model = model
        self.api_key = api_key
        self.endpoint = endpoint.rstrip('/')
        self.session = session or requests.Session()
        self.timeout = timeout

    def generate(self, prompt: str, request: JudgeRequest) -> BackendReply:
        payload = {
            'model': self.model,
            'messages': [{'role': 'user', 'content': prompt}],
            'temperature': request.params.temperature,
            'top_p': request.params.top_p,
        }
        data = _post_json(self.session, f"{self.endpoint}/chat/completions", payload,
                          {'Authorization': f"Bearer {self.api_key}"}, self.timeout)
        try:
            text = data['choices'][0]['message']['content'] or ''
        except (KeyError, IndexError, TypeError):
            raise TransportError(f"Judge response carried no choices: {str(data)[:200]}", transient=False)
        tokens = int((data.get('usage') or {}).get('total_tokens') or 0)
        return BackendReply(text=text, total_tokens=tokens)


BACKENDS = {
    'gemini': GeminiBackend,
    'openai': OpenAICompatibleBackend,
}


def build_backend(name: str, model: str, api_key_env: str, endpoint: Optional[str] = None,
                  timeout: float = 120.0, session=None) -> JudgeBackend:
    try:
        backend_cls = BACKENDS[name]
    except KeyError:
        raise ConfigurationError(f"Unknown judge backend '{name}', expected one of {sorted(BACKENDS)}") from None
    kwargs = {'session': session, 'timeout': timeout}
    if endpoint:
        kwargs['endpoint'] = endpoint
    return backend_cls(model, os.environ.get(api_key_env, ''), **kwargs)


@dataclasses.dataclass
class GatewayStats:
    calls: int = 0
    cache_hits: int = 0
    retries: int = 0
    schema_violations: int = 0
    total_tokens: int = 0

    def to_dict(self) -> Dict[str, int]:
        return dataclasses.asdict(self)


class JudgeGateway:
    def __init__(self, backend: JudgeBackend, store: ReplayStore, max_attempts: int = 3, backoff: float = 2.0,
                 parallelism: int = 4, sleep: Callable[[float], None] = time.sleep, seed: Optional[int] = None):
        self.backend = backend
        self.store = store
        self.max_attempts = max(1, max_attempts)
        self.backoff = backoff
        self.sleep = sleep
        self.stats = GatewayStats()
        self._stats_lock = threading.Lock()
        self._limiter = threading.BoundedSemaphore(max(1, parallelism))
        self._jitter = random.Random(seed)
        self.digests = set()

    @property
    def backend_id(self) -> str:
        return self.backend.identity

    def _count(self, **increments):
        with self._stats_lock:
            for name, value in increments.items():
                setattr(self.stats, name, getattr(self.stats, name) + value)

    def _call_backend(self, request: JudgeRequest, prompt: str) -> str:
        attempt = 0
        while True:
            attempt += 1
            try:
                with self._limiter:
                    reply = self.backend.generate(prompt, request)
                self._count(calls=1, total_tokens=reply.total_tokens)
                return reply.text
            except TransportError as e:
                if not e.transient or attempt >= self.max_attempts:
                    logger.error(f"Judge call for {request.phase.value} failed after {attempt} attempt(s): {e}")
                    raise
                delay = self.backoff * (2 ** (attempt - 1)) + self._jitter.uniform(0, self.backoff)
                logger.warning(f"Transient judge failure ({e}), retrying in {delay:.1f}s")
                self._count(retries=1)
                self.sleep(delay)

    def invoke(self, request: JudgeRequest, bypass_cache: bool = False) -> JudgeResponse:
        prompt = request.render()
        digest = request.digest(self.backend_id)
        with self._stats_lock:
            self.digests.add(digest)
        mode = self.store.mode
        raw = None
        if mode != CacheMode.Passthrough and not (bypass_cache and mode == CacheMode.Record):
            raw = self.store.get(digest)
        cache_hit = raw is not None
        if cache_hit:
            logger.debug(f"Cache hit for {request.phase.value} {digest[:12]}")
            self._count(cache_hits=1)
        elif mode == CacheMode.Replay:
            raise ReplayMissError(digest, request.phase.value)
        else:
            logger.info(f"Calling judge {self.backend_id} for {request.phase.value} {digest[:12]}")
            raw = self._call_backend(request, prompt)
            if mode == CacheMode.Record:
                self.store.put(digest, raw, {'phase': request.phase.value, 'backend': self.backend_id,
                                             'params': request.params.to_dict()})
        try:
            parsed = parse_strict_json(raw, request.phase)
        except SchemaViolation:
            self._count(schema_violations=1)
            raise
        return JudgeResponse(raw_text=raw, parsed=parsed,
                             provenance=Provenance(backend=self.backend_id, cache_hit=cache_hit, digest=digest))


def invoke_judge(request: JudgeRequest, store: ReplayStore, backend: JudgeBackend, **gateway_kwargs) -> JudgeResponse:
    """One-off invocation; pipelines share a long-lived JudgeGateway instead."""
    return JudgeGateway(backend, store, **gateway_kwargs).invoke(request)


def invoke_keyed(gateway: JudgeGateway, request: JudgeRequest, list_key: str, id_key: str,
                 expected) -> Dict[Any, dict]:
    """
    Calls the judge for an answer list holding exactly one entry per expected id.

    A mismatch is retried once with a fresh backend call in record mode; a
    replayed mismatch raises ``LengthMismatch``.
    """
    expected = list(expected)
    bypass = False
    while True:
        response = gateway.invoke(request, bypass_cache=bypass)
        items = response.parsed[list_key]
        by_id = {item[id_key]: item for item in items}
        if len(items) == len(expected) and set(by_id) == set(expected):
            return by_id
        message = (f"{request.phase.value} answered {len(items)} entries for {len(expected)} inputs "
                   f"({id_key}s {sorted(by_id, key=str)})")
        if bypass or gateway.store.mode != CacheMode.Record:
            raise LengthMismatch(message)
        logger.warning(f"{message}, retrying without the cache")
        bypass = True


class ScopedGateway:
    """
    Gateway view that remembers the digests one unit of work touched and
    applies the run's decoding parameters to every request.
    """

    def __init__(self, gateway: JudgeGateway, params: Optional[DecodeParams] = None):
        self.gateway = gateway
        self.params = params
        self.digests = set()

    @property
    def store(self) -> ReplayStore:
        return self.gateway.store

    @property
    def backend_id(self) -> str:
        return self.gateway.backend_id

    def invoke(self, request: JudgeRequest, bypass_cache: bool = False) -> JudgeResponse:
        if self.params is not None:
            request = dataclasses.replace(request, params=self.params)
        self.digests.add(request.digest(self.backend_id))
        return self.gateway.invoke(request, bypass_cache=bypass_cache)
