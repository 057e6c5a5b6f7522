"""Pluggable perception backends and the remote chat-completions adapter.

Two capabilities exist: turning a rubric into a draft item (gold graph,
ontology, hint templates) and turning a sketch image reference into a
student graph. The fixture backend serves canned graphs from a pack
directory for deterministic desk-scale runs; the remote backend talks to a
chat-completions endpoint with JSON-schema-enforced output, bounded
error-feedback retries, and one audit-log record per network attempt.

No graph leaves this module without passing SRG-JSON parsing and structural
validation.
"""
from __future__ import annotations

import hashlib
import json
import os
import socket
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .errors import (
    BackendUnavailable,
    IncompleteMapping,
    NetworkError,
    SchemaViolation,
    Timeout,
)
from .items import ItemSpec, load_item_dir, missing_phi_keys, phi_from_obj
from .ontology import ontology_from_obj
from .scoring import ScoringParams
from .srg import BloomLevel, Role, Srg, srg_from_obj, validate_against_ontology

RETRY_BUDGET_DEFAULT = 2


@dataclass(frozen=True)
class AgentRequestLog:
    timestamp: str  # UTC, millisecond precision
    backend_id: str
    model: str
    prompt: dict
    response: str
    latency_ms: float
    outcome: str  # ok | schema_retry | failed

    def to_obj(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "backend_id": self.backend_id,
            "model": self.model,
            "prompt": self.prompt,
            "response": self.response,
            "latency_ms": self.latency_ms,
            "outcome": self.outcome,
        }


class AuditLog:
    """Append-only request log; writes NDJSON when given a path."""

    def __init__(self, path: Path | None = None):
        self.path = Path(path) if path else None
        self.records: list[AgentRequestLog] = []
        self._lock = threading.Lock()

    def append(self, record: AgentRequestLog):
        with self._lock:
            self.records.append(record)
            if self.path:
                with self.path.open("a") as fh:
                    fh.write(json.dumps(record.to_obj()) + "\n")


def _now_utc_ms() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


# ---------------------------------------------------------------------------
# Minimal JSON-schema validation (type/properties/required/items/enum).
# ---------------------------------------------------------------------------

_TYPES = {
    "object": dict,
    "array": list,
    "string": str,
    "number": (int, float),
    "integer": int,
    "boolean": bool,
    "null": type(None),
}


def _type_ok(obj, name: str) -> bool:
    py = _TYPES.get(name)
    if py is None:
        return False
    if isinstance(obj, bool) and name in ("number", "integer"):
        return False
    return isinstance(obj, py)


def validate_schema(obj, schema: dict, path: str = "$") -> list[str]:
    errors: list[str] = []
    expected = schema.get("type")
    if expected is not None:
        names = expected if isinstance(expected, list) else [expected]
        unknown = [n for n in names if n not in _TYPES]
        if unknown:
            errors.append(f"{path}: unsupported schema type {unknown}")
            return errors
        if not any(_type_ok(obj, n) for n in names):
            errors.append(f"{path}: expected {' or '.join(names)}, got {type(obj).__name__}")
            return errors
    if "enum" in schema and obj not in schema["enum"]:
        errors.append(f"{path}: {obj!r} not in {schema['enum']}")
    if isinstance(obj, dict):
        for key in schema.get("required", []):
            if key not in obj:
                errors.append(f"{path}: missing required key {key!r}")
        props = schema.get("properties", {})
        for key, sub in props.items():
            if key in obj:
                errors.extend(validate_schema(obj[key], sub, f"{path}.{key}"))
        if schema.get("additionalProperties") is False:
            for key in obj:
                if key not in props:
                    errors.append(f"{path}: unexpected key {key!r}")
    if isinstance(obj, list) and "items" in schema:
        for i, v in enumerate(obj):
            errors.extend(validate_schema(v, schema["items"], f"{path}[{i}]"))
    return errors


_EVIDENCE_SCHEMA = {
    "type": "object",
    "properties": {
        "text": {"type": "string"},
        "region": {"type": ["array", "null"], "items": {"type": "number"}},
    },
}

SRG_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["srg_version", "item_id", "role", "nodes", "edges"],
    "properties": {
        "srg_version": {"type": "string"},
        "item_id": {"type": "string"},
        "role": {"type": "string", "enum": ["gold", "student"]},
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "concept", "bloom"],
                "properties": {
                    "id": {"type": "string"},
                    "concept": {"type": "string"},
                    "bloom": {"type": "string"},
                    "evidence": _EVIDENCE_SCHEMA,
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["source", "target", "relation"],
                "properties": {
                    "source": {"type": "string"},
                    "target": {"type": "string"},
                    "relation": {"type": "string"},
                    "evidence": _EVIDENCE_SCHEMA,
                },
            },
        },
    },
}

ITEM_DRAFT_SCHEMA = {
    "type": "object",
    "required": ["ontology", "gold", "phi"],
    "properties": {
        "ontology": {"type": "object"},
        "gold": SRG_RESPONSE_SCHEMA,
        "phi": {"type": "object"},
    },
}

RUBRIC_PROMPT_TEMPLATE = """You are an assessment designer. Read the prompt and rubric below and
produce a JSON object with keys "ontology", "gold" and "phi" describing the
reference concept graph for this item.

Prompt:
{prompt}

Rubric:
{rubric}

Respond with JSON only."""

SKETCH_PROMPT_TEMPLATE = """You are a sketch perception assistant. The student sketch is at {image_ref}.
Extract the concept graph the sketch expresses for item {item_id}, using only
concepts from this vocabulary: {concepts}
and relations from: {relations}

Respond with SRG-JSON only (role "student")."""


def _template_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:12]


Transport = Callable[[str, dict, dict, float], tuple[int, str]]


def _urllib_transport(url: str, body: dict, headers: dict, timeout: float) -> tuple[int, str]:
    req = urllib.request.Request(
        url,
        data=json.dumps(body).encode(),
        headers={"Content-Type": "application/json", **headers},
        method="POST",
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.status, resp.read().decode()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read().decode(errors="replace")
    except (TimeoutError, socket.timeout) as exc:
        raise Timeout(f"request to {url} timed out") from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, (TimeoutError, socket.timeout)):
            raise Timeout(f"request to {url} timed out") from exc
        raise NetworkError(f"request to {url} failed: {exc.reason}") from exc


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    backend_id: str = "remote"
    api_key_env: str = "SKETCHEVAL_API_TOKEN"
    timeout_s: float = 30.0
    retries: int = RETRY_BUDGET_DEFAULT


def remote_call(
    config: EndpointConfig,
    system: str,
    user: str,
    response_schema: dict,
    retries: int | None = None,
    deep_validate: Callable[[dict], list[str]] | None = None,
    transport: Transport | None = None,
    audit: AuditLog | None = None,
) -> dict:
    """One structured-output request with bounded error-feedback retries.

    Every network attempt appends exactly one audit record. Schema or
    deep-validation failures re-ask with the errors attached; transport
    failures (Timeout/NetworkError) are logged as failed and raised without
    retrying.
    """
    retries = config.retries if retries is None else retries
    transport = transport or _urllib_transport
    audit = audit or AuditLog()
    url = config.base_url.rstrip("/") + "/chat/completions"
    token = os.environ.get(config.api_key_env, "")
    headers = {"Authorization": f"Bearer {token}"} if token else {}
    messages = [
        {"role": "system", "content": system},
        {"role": "user", "content": user},
    ]
    prompt_hash = _template_hash(system)

    last_errors: list[str] = []
    for attempt in range(retries + 1):
        body = {
            "model": config.model,
            "messages": list(messages),
            "response_format": {"type": "json_object"},
        }
        prompt_payload = {"prompt_hash": prompt_hash, "attempt": attempt, "body": body}
        start = time.monotonic()
        try:
            status, text = transport(url, body, headers, config.timeout_s)
        except (Timeout, NetworkError) as exc:
            audit.append(
                AgentRequestLog(
                    timestamp=_now_utc_ms(),
                    backend_id=config.backend_id,
                    model=config.model,
                    prompt=prompt_payload,
                    response=str(exc),
                    latency_ms=(time.monotonic() - start) * 1000.0,
                    outcome="failed",
                )
            )
            raise
        latency = (time.monotonic() - start) * 1000.0

        errors: list[str] = []
        payload = None
        if status != 200:
            errors.append(f"HTTP status {status}")
        else:
            try:
                envelope = json.loads(text)
                content = envelope["choices"][0]["message"]["content"]
                payload = content if isinstance(content, dict) else json.loads(content)
            except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
                errors.append(f"unparseable completion: {exc}")
        if payload is not None:
            errors.extend(validate_schema(payload, response_schema))
            if not errors and deep_validate is not None:
                errors.extend(deep_validate(payload))

        final = attempt == retries
        outcome = "ok" if not errors else ("failed" if final else "schema_retry")
        audit.append(
            AgentRequestLog(
                timestamp=_now_utc_ms(),
                backend_id=config.backend_id,
                model=config.model,
                prompt=prompt_payload,
                response=text,
                latency_ms=latency,
                outcome=outcome,
            )
        )
        if not errors:
            return payload
        last_errors = errors
        messages.append({"role": "assistant", "content": text if isinstance(text, str) else json.dumps(text)})
        messages.append(
            {
                "role": "user",
                "content": "Your previous answer failed validation:\n"
                + "\n".join(f"- {e}" for e in errors)
                + "\nReturn corrected JSON only.",
            }
        )
    raise SchemaViolation(f"no valid response after {retries + 1} attempts: {last_errors}")


# ---------------------------------------------------------------------------
# Draft validation shared by all backends.
# ---------------------------------------------------------------------------


def _student_srg_errors(payload: dict, item: ItemSpec) -> list[str]:
    errors = validate_schema(payload, SRG_RESPONSE_SCHEMA)
    if errors:
        return errors
    try:
        g = srg_from_obj(payload)
    except Exception as exc:
        return [str(exc)]
    if g.role is not Role.STUDENT:
        return [f"expected role 'student', got {g.role.value!r}"]
    return []


def _item_draft_errors(payload: dict) -> list[str]:
    errors = validate_schema(payload, ITEM_DRAFT_SCHEMA)
    if errors:
        return errors
    try:
        ontology = ontology_from_obj(payload["ontology"])
        gold = srg_from_obj(payload["gold"])
        phi = phi_from_obj(payload["phi"], gold)
    except Exception as exc:
        return [str(exc)]
    if gold.role is not Role.GOLD:
        return [f"expected role 'gold', got {gold.role.value!r}"]
    report = validate_against_ontology(gold, ontology)
    if not report.ok:
        return [f"gold graph does not resolve: {i.kind}:{i.value}" for i in report.issues]
    missing = missing_phi_keys(phi, gold)
    if missing:
        return [f"phi lacks templates for {missing}"]
    return []


def _draft_to_item(payload: dict, scoring: ScoringParams | None) -> ItemSpec:
    ontology = ontology_from_obj(payload["ontology"])
    gold = srg_from_obj(payload["gold"])
    phi = phi_from_obj(payload["phi"], gold)
    spec = ItemSpec(
        item_id=gold.item_id,
        prompt_text=payload.get("prompt_text", ""),
        image_refs=tuple(payload.get("image_refs", [])),
        rubric_text=payload.get("rubric_text", ""),
        gold=gold,
        ontology=ontology,
        phi=phi,
        scoring=scoring or ScoringParams(),
        highest_bloom=max((n.bloom for n in gold.nodes), default=BloomLevel.REMEMBER),
    )
    return spec.validate()


# ---------------------------------------------------------------------------
# Backends.
# ---------------------------------------------------------------------------


class FixtureBackend:
    """Serves graphs from a pack directory; bit-deterministic by construction.

    Sketch references follow ``sketch://<item_id>/<sample_id>`` and resolve
    to the pack's sample files.
    """

    capabilities = {"rubric_parsing": True, "sketch_perception": True}

    def __init__(self, pack_root: Path):
        self.pack_root = Path(pack_root)

    def _item_dir(self, item_id: str) -> Path:
        d = self.pack_root / item_id
        if not d.is_dir():
            raise BackendUnavailable(f"no fixture item {item_id!r} under {self.pack_root}")
        return d

    def parse_rubric(self, rubric_text: str, prompt_text: str, image_refs: tuple[str, ...]) -> ItemSpec:
        for d in sorted(p for p in self.pack_root.iterdir() if p.is_dir()):
            spec = load_item_dir(d)
            if spec.rubric_text == rubric_text or spec.item_id in rubric_text:
                return spec
        raise BackendUnavailable(f"no fixture item matches the given rubric under {self.pack_root}")

    def perceive_sketch(self, image_ref: str, item: ItemSpec) -> dict:
        if not image_ref.startswith("sketch://"):
            raise BackendUnavailable(f"fixture backend cannot resolve {image_ref!r}")
        rest = image_ref[len("sketch://") :]
        item_id, _, sample_id = rest.partition("/")
        path = self._item_dir(item_id) / "samples" / f"{sample_id}.srg.json"
        if not path.is_file():
            raise BackendUnavailable(f"no fixture sketch {image_ref!r}")
        return json.loads(path.read_text())


class RemoteBackend:
    """Chat-completions adapter with schema enforcement and audit logging."""

    capabilities = {"rubric_parsing": True, "sketch_perception": True}

    def __init__(self, config: EndpointConfig, transport: Transport | None = None, audit: AuditLog | None = None):
        self.config = config
        self.transport = transport
        self.audit = audit or AuditLog()

    def parse_rubric(self, rubric_text: str, prompt_text: str, image_refs: tuple[str, ...]):
        user = RUBRIC_PROMPT_TEMPLATE.format(prompt=prompt_text, rubric=rubric_text)
        return remote_call(
            self.config,
            system="Produce assessment item drafts as strict JSON.",
            user=user,
            response_schema=ITEM_DRAFT_SCHEMA,
            deep_validate=_item_draft_errors,
            transport=self.transport,
            audit=self.audit,
        )

    def perceive_sketch(self, image_ref: str, item: ItemSpec) -> dict:
        user = SKETCH_PROMPT_TEMPLATE.format(
            image_ref=image_ref,
            item_id=item.item_id,
            concepts=", ".join(sorted(item.ontology.concepts)),
            relations=", ".join(sorted(item.ontology.relations)),
        )
        return remote_call(
            self.config,
            system="Extract student concept graphs as strict SRG-JSON.",
            user=user,
            response_schema=SRG_RESPONSE_SCHEMA,
            deep_validate=lambda payload: _student_srg_errors(payload, item),
            transport=self.transport,
            audit=self.audit,
        )


def rubric_to_item(
    rubric_text: str,
    prompt_text: str,
    image_refs: tuple[str, ...],
    backend,
    scoring: ScoringParams | None = None,
) -> ItemSpec:
    """Agent-1 entry point: rubric in, validated draft ItemSpec out."""
    if not backend.capabilities.get("rubric_parsing"):
        raise BackendUnavailable("backend does not support rubric parsing")
    result = backend.parse_rubric(rubric_text, prompt_text, image_refs)
    if isinstance(result, ItemSpec):
        return result.validate()
    errors = _item_draft_errors(result)
    if errors:
        missing_only = all("phi lacks templates" in e for e in errors)
        if missing_only:
            raise IncompleteMapping("; ".join(errors))
        raise SchemaViolation(f"backend draft failed validation: {errors}")
    return _draft_to_item(result, scoring)


def sketch_to_srg(image_ref: str, item: ItemSpec, backend) -> Srg:
    """Agent-2 entry point: sketch reference in, validated student Srg out.

    Unknown concepts are retained (they score 0) and surface through
    validate_against_ontology; structural violations never escape.
    """
    if not backend.capabilities.get("sketch_perception"):
        raise BackendUnavailable("backend does not support sketch perception")
    payload = backend.perceive_sketch(image_ref, item)
    errors = _student_srg_errors(payload, item)
    if errors:
        raise SchemaViolation(f"backend sketch output failed validation: {errors}")
    return srg_from_obj(payload)
