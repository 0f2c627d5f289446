#!/usr/bin/env python3
"""Build a self-contained demo under ./demo: a tiny course corpus, ontology,
mock-scripted provider config, KB and index files.

Afterwards:
    courseqa ask   --config demo/config.json --question "What is a honeypot?"
    courseqa serve --config demo/config.json
"""

import json
import sys
from pathlib import Path

from courseqa.corpus import ingest, save_kb
from courseqa.index import build_index, save as save_index
from courseqa.providers import ProviderConfig

DOCS = {
    "honeypots": (
        "slide",
        "A honeypot is a decoy system that lures attackers away from production "
        "systems so their behavior can be studied safely.",
    ),
    "ids-lab": (
        "assignment",
        "Lab 2: set up the intrusion detection sensor, then configure monitoring "
        "rules, and finally replay the provided capture file to verify alerts.",
    ),
    "vuln-basics": (
        "qa_pair",
        "Q: What is a vulnerability? A: A weakness in a system that an attacker "
        "can exploit to gain unauthorized access.",
    ),
    "cloud-virt": (
        "slide",
        "Virtualization lets multiple virtual machines share one physical server; "
        "a hypervisor schedules CPU, memory, and devices between them.",
    ),
    "scaling": (
        "slide",
        "Auto scaling adds or removes instances to match load, while load "
        "balancers spread traffic across the instances that exist.",
    ),
}

ONTOLOGY = """\
# demo course ontology
attacker | can_exploit | vulnerability
system | can_expose | vulnerability
tool | can_analyze | vulnerability
honeypot | can_lure | attacker
hypervisor | can_schedule | virtual machine
load balancer | can_spread | traffic
"""

VERDICT = json.dumps(
    {
        "validation_result": "Pass",
        "confidence_score": 0.9,
        "reasoning": "Demo verdict: scripted mock verifier.",
    }
)

SCRIPT = {
    "CHAT HISTORY:": "What is a honeypot used for in intrusion detection?",
    "INSTRUCTIONS:": "A honeypot is a decoy system that lures attackers so their behavior can be studied.",
    "Return ONLY a JSON response": VERDICT,
}


def main() -> int:
    demo = Path("demo")
    corpus_dir = demo / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for doc_id, (kind, text) in DOCS.items():
        (corpus_dir / f"{doc_id}.txt").write_text(text, encoding="utf-8")
        entries.append(
            {"doc_id": doc_id, "course_id": "demo-101", "kind": kind, "path": f"{doc_id}.txt", "metadata": {}}
        )
    manifest = corpus_dir / "manifest.json"
    manifest.write_text(json.dumps({"kb_id": "demo-kb", "documents": entries}, indent=1))

    (demo / "ontology.txt").write_text(ONTOLOGY)

    kb = ingest(manifest)
    save_kb(kb, demo / "kb.json")
    idx = build_index(kb, ProviderConfig(kind="mock"))
    save_index(idx, demo / "kb.vidx")

    config = {
        "kb_path": "kb.json",
        "index_path": "kb.vidx",
        "ontology_path": "ontology.txt",
        "db_path": "demo.db",
        "port": 8000,
        "completion_provider": {"kind": "mock", "script": SCRIPT, "echo": True},
        "embedding_provider": {"kind": "mock"},
    }
    (demo / "config.json").write_text(json.dumps(config, indent=1))
    print(f"demo assets written under {demo}/ ({len(kb.chunks)} chunks indexed)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
