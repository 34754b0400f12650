"""Prompt templates for the structured-output generator.

Each template pairs with a schema tag in :mod:`toolkg.providers`. Only the
JSON shapes are contractual; the wording can be tuned freely.
"""

from __future__ import annotations

import json

TRIPLE_EXTRACTION = """\
Task: build knowledge-graph triples from one enterprise tool description.

Return every fact as {{"head": <entity>, "relationship": <relation>, "tail": <entity>}}.

Always emit these structural triples, using the tool title as head:
- has_parameter for each listed parameter
- has_line_of_business for the line of business, when one is given
- has_entity for each business entity mentioned in the text, and for every head or tail used elsewhere

Other relations must come from this list: {relations}.
Allowed entity categories: {entity_types}.

Rules: no repeated triples; head and tail must differ; the tool title may only be the head of
has_parameter, has_entity and has_line_of_business triples; split long sentences into simple facts;
name each entity the same way every time.

Reply with JSON only, shaped as {{"relationships": [{{"head": "...", "tail": "...", "relationship": "..."}}]}}.

Tool title: {title}
Line of business: {line_of_business}
Description: {description}
Parameters: {parameters}
"""

OUTPUT_PARAMETERS = """\
Task: decide which of the candidate parameters a business tool produces, updates or returns.

Pick at most 3 candidates, and only ones with clear support from the tool name, description and
inputs. Return [] when nothing qualifies; precision matters more than recall.

Score each pick with a confidence between 0 and 1:
  0.90-0.99 stated or directly implied output
  0.70-0.89 follows from the description and usual practice
  0.50-0.69 weak hints only
  below 0.50 leave it out

Reply with a JSON array only. Each item:
{{"parameter_name": "<from candidates>", "parameter_id": "<from candidates>",
  "confidence_score": <float 0..1>, "reasoning": "<one or two sentences>"}}

Candidates: {available_params}

Tool ID: {tool_id}
Tool name: {title}
Tool description: {description}
Input parameters: {parameters}
"""

QUERY_GENERATION = """\
Task: write realistic user requests that need the following chain of tools, in order.

Tool chain:
{chain}

Write exactly one request for each of these classes: {classes}.

Class definitions:
- single-intent: one request handled by a single tool.
- multi-intent: several independent requests with no ordering between them.
- explicit-multi-step: several actions whose order is spelled out ("show X, then do Y").
- implicit-multi-step: the user states only the final goal; earlier steps must be inferred.
  Do not use "then", "also", conjunctions joining separate tasks, or an "if" clause.
- conditional-multi-step: an action that runs only when a stated condition holds ("if X, do Y").
- ir-multi-intent: a general question about rules or definitions plus a personal action.

Sound like a person, not like the tool documentation. Fill in at least one input with a concrete,
made-up value (for example a city, an amount or an ID).

Reply with JSON only: {{"queries": [{{"query_class": "<class>", "query": "<text>"}}]}}
"""

SEQUENCE_VALIDATION = """\
Task: judge whether the second tool can sensibly follow the first in one multi-step workflow.

The pair is valid only when the second step builds on the result or state produced by the first.
Unrelated or merely parallel tools are invalid.

Reply with JSON only:
{{"from_scenario_id": "<id>", "to_scenario_id": "<id>", "is_valid": true or false,
  "explanation": "<short rationale with an example use case>"}}

First tool
  ID: {from_id}
  Name: {from_title}
  Description: {from_description}
  Inputs: {from_parameters}

Second tool
  ID: {to_id}
  Name: {to_title}
  Description: {to_description}
  Inputs: {to_parameters}
"""


def describe_parameters(tool) -> str:
    if not tool.parameters:
        return "(none)"
    return "; ".join(f"{p.name} ({p.value_type or 'any'}): {p.description}" for p in tool.parameters)


def render_extraction(tool, ontology) -> str:
    relations = sorted(ontology.predicate_types)
    return TRIPLE_EXTRACTION.format(
        relations=", ".join(relations),
        entity_types=", ".join(sorted(ontology.entity_types)),
        title=tool.title,
        line_of_business=tool.metadata.get("line_of_business", "(unspecified)"),
        description=tool.description,
        parameters=describe_parameters(tool),
    )


def render_outputs(tool, available_params) -> str:
    return OUTPUT_PARAMETERS.format(
        available_params=json.dumps(available_params, ensure_ascii=False, sort_keys=True),
        tool_id=tool.tool_id,
        title=tool.title,
        description=tool.description,
        parameters=describe_parameters(tool),
    )


def render_queries(tools, classes) -> str:
    chain = "\n".join(
        f"{i}. {t.title}: {t.description} Inputs: {describe_parameters(t)}" for i, t in enumerate(tools, 1)
    )
    return QUERY_GENERATION.format(chain=chain, classes=", ".join(classes))


def render_sequence(first, second) -> str:
    return SEQUENCE_VALIDATION.format(
        from_id=first.tool_id,
        from_title=first.title,
        from_description=first.description,
        from_parameters=describe_parameters(first),
        to_id=second.tool_id,
        to_title=second.title,
        to_description=second.description,
        to_parameters=describe_parameters(second),
    )
