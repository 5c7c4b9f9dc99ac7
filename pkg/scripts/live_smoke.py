#!/usr/bin/env python3
"""Optional live smoke test against a real chat-completion endpoint.

Runs one infrastructure task end to end and reports latency and structural
validity. Informational only; no pass/fail threshold.

    DRAWGEN_API_KEY=... python3 scripts/live_smoke.py \
        --endpoint https://llm.example/v1/chat --model my-model
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parents[1] / "src"))

from drawgen.cli import _data_path, load_task
from drawgen.pipeline import run_generation
from drawgen.prompts import load_default_examples
from drawgen.provider import HttpProvider, ProviderConfig, ProviderKind
from drawgen.verifier import semantic_accuracy


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--endpoint", required=True)
    parser.add_argument("--model", default="default")
    parser.add_argument("--api-key-env", default="DRAWGEN_API_KEY")
    parser.add_argument("--temperature", type=float, default=0.2)
    args = parser.parse_args()

    task = load_task(_data_path("bench", "tasks", "t01-webshop.json"))
    provider = HttpProvider(
        ProviderConfig(
            kind=ProviderKind.HTTP,
            endpoint_url=args.endpoint,
            api_key_env_var_name=args.api_key_env,
            model_id=args.model,
            temperature=args.temperature,
        )
    )
    print(f"task: {task.id}\nprompt: {task.prompt}\n")
    started = time.monotonic()
    generation = run_generation(provider, task.prompt, examples=load_default_examples())
    while True:
        try:
            event, payload = next(generation)
        except StopIteration as done:
            result = done.value
            break
        if event == "text":
            sys.stdout.write(payload["text"])
            sys.stdout.flush()
    elapsed = time.monotonic() - started

    print("\n")
    print(f"status: {result.status}")
    print(f"latency_seconds: {elapsed:.2f}")
    print(f"correction_iterations: {result.correction_iterations}")
    if result.diagram is not None:
        print(f"semantic_accuracy: {semantic_accuracy(result.diagram, task.requirements):.3f}")
        print("structurally_valid: true")
    else:
        print(f"error: {result.error}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
