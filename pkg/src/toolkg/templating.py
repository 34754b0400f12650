"""A deterministic, rule-based stand-in for the structured generator.

It answers every request schema from the request context alone, so the
query-generation pipeline and the bundled benchmark run offline and
reproducibly. Its answers are plausible, not clever: it is a fixture, not a
language model.
"""

from __future__ import annotations

import hashlib
import json

from .catalog import ParameterSpec, ToolSpec
from .providers import GeneratorRequest, GeneratorResponse, parse_generator_output
from .text import canonicalize_entity, name_tokens

# Trailing tokens that mark a parameter as an identifier of its head noun.
GENERIC_SUFFIXES = frozenset({"id", "number", "code", "key", "name", "no"})


def tool_from_dict(d: dict) -> ToolSpec:
    params = tuple(ParameterSpec(p["name"], p.get("description", ""), p.get("value_type", "")) for p in d.get("parameters", []))
    return ToolSpec(d["tool_id"], d["title"], d.get("description", ""), params, d.get("metadata", {}))


def _head_tokens(param_name: str) -> list[str]:
    toks = name_tokens(param_name)
    while len(toks) > 1 and toks[-1] in GENERIC_SUFFIXES:
        toks = toks[:-1]
    return toks


def _sample_value(tool_id: str, param: str) -> str:
    digest = hashlib.sha256(f"{tool_id}\x1f{param}".encode("utf-8")).digest()
    prefix = "".join(t[0] for t in name_tokens(param)).upper() or "X"
    return f"{prefix}{1000 + int.from_bytes(digest[:4], 'big') % 9000}"


def _action(tool: ToolSpec) -> str:
    return tool.title.strip().rstrip(".").lower()


def _object(tool: ToolSpec) -> str:
    words = _action(tool).split()
    return " ".join(words[1:]) if len(words) > 1 else words[0]


def _param_phrase(tool: ToolSpec) -> tuple[str, str]:
    if not tool.parameters:
        return "reference", _sample_value(tool.tool_id, "reference")
    p = tool.parameters[0].name
    return " ".join(name_tokens(p)), _sample_value(tool.tool_id, p)


class TemplateGenerator:
    """Rule-based answers for the ``triples``, ``outputs``, ``sequence`` and
    ``queries`` schemas."""

    fingerprint = "template-v1"

    def generate(self, request: GeneratorRequest) -> GeneratorResponse:
        handler = getattr(self, f"_{request.schema}")
        return parse_generator_output(json.dumps(handler(request.context), sort_keys=True), request.schema)

    def _triples(self, ctx):
        return {"relationships": []}

    def _outputs(self, ctx):
        tool = tool_from_dict(ctx["tool"])
        title = set(name_tokens(tool.title))
        desc = set(name_tokens(tool.description))
        picked = []
        for item in ctx["available_params"]:
            head = set(_head_tokens(item["parameter_name"]))
            if not head:
                continue
            if head <= title:
                conf = 0.9
            elif head <= desc:
                conf = 0.7
            else:
                continue
            picked.append(
                {
                    "parameter_name": item["parameter_name"],
                    "parameter_id": item["parameter_id"],
                    "confidence_score": conf,
                    "reasoning": "the tool works on the object this parameter identifies",
                }
            )
        picked.sort(key=lambda x: (-x["confidence_score"], x["parameter_id"]))
        return picked[:3]

    def _sequence(self, ctx):
        first, second = tool_from_dict(ctx["from"]), tool_from_dict(ctx["to"])
        shared = {canonicalize_entity(p.name) for p in first.parameters} & {
            canonicalize_entity(p.name) for p in second.parameters
        }
        title = set(name_tokens(first.title))
        fed = any(set(_head_tokens(p.name)) <= title for p in second.parameters if _head_tokens(p.name))
        ok = bool(shared) or fed
        why = "the tools share an input" if shared else "the first tool yields what the second needs" if fed else "no data flows between the tools"
        return {"from_scenario_id": first.tool_id, "to_scenario_id": second.tool_id, "is_valid": ok, "explanation": why}

    def _queries(self, ctx):
        tools = [tool_from_dict(t) for t in ctx["tools"]]
        first, last = tools[0], tools[-1]
        p, v = _param_phrase(first)
        acts = [_action(t) for t in tools]
        out = []
        for cls in ctx["classes"]:
            if cls == "single-intent":
                q = f"Please {acts[0]} for {p} {v}."
            elif cls == "explicit-multi-step":
                q = f"Can you {acts[0]} for {p} {v}, " + ", ".join(f"then {a}" for a in acts[1:]) + "?"
            elif cls == "implicit-multi-step":
                q = f"I need to {acts[-1]} for {p} {v}."
            elif cls == "conditional-multi-step":
                q = f"If the {p} from {_object(first)} is {v}, " + " and ".join(acts[1:]) + "."
            elif cls == "multi-intent":
                q = f"Please {acts[0]} for {p} {v} and " + " and ".join(acts[1:]) + "."
            elif cls == "ir-multi-intent":
                q = f"What is a {_object(last)}? Also, {acts[0]} for {p} {v} and " + " and ".join(acts[1:]) + "."
            else:
                continue
            out.append({"query_class": cls, "query": q})
        return {"queries": out}
