"""Hierarchical document model: parsing, cross-reference detection and
resolution, and the bundled multi-domain corpus.

Corpus file format: a front block of ``doc_id:`` / ``domain:`` lines ended
by a blank line, then markdown-style headings (``#`` per level, optional
``{#explicit-id}`` suffix) with body text attached to the nearest
preceding heading.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

DOMAINS = ("financial", "legal", "medical", "external")


class DocumentFormatError(ValueError):
    """Structural problem in a corpus document; carries the line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass
class CrossReference:
    source_node_id: str
    target_label: str
    resolved_target_id: str | None = None


@dataclass
class SectionNode:
    node_id: str
    title: str
    level: int
    body: str = ""
    children: list["SectionNode"] = field(default_factory=list)
    cross_refs: list[CrossReference] = field(default_factory=list)


@dataclass
class DocumentTree:
    doc_id: str
    domain: str
    root: SectionNode
    node_lookup: dict[str, SectionNode] = field(default_factory=dict)
    resolution_diagnostics: list[str] = field(default_factory=list)

    def document_order(self) -> list[SectionNode]:
        """All nodes in pre-order, root included."""
        out: list[SectionNode] = []

        def walk(node: SectionNode) -> None:
            out.append(node)
            for child in node.children:
                walk(child)

        walk(self.root)
        return out


# One configuration table of reference patterns: an optional lead-in verb
# followed by a kind keyword and a short designator (digits with optional
# dotted sub-numbers, or a single letter). Only the kind+designator part is
# returned as the label.
REFERENCE_PATTERNS = [
    re.compile(
        r"(?:(?:see|as defined in|described in|refer to)\s+)?"
        r"\b((?:appendix|exhibit|section|note|item)\s+"
        r"(?:[0-9]+(?:\.[0-9]+)*|[a-z]))(?![a-z0-9])",
        re.IGNORECASE,
    ),
]

_HEADING = re.compile(r"^(#+)\s+(.*?)(?:\s*\{#([A-Za-z0-9:_.-]+)\})?\s*$")


def detect_cross_references(body: str) -> list[str]:
    """Return every reference label in order of appearance, duplicates kept."""
    matches: list[tuple[int, str]] = []
    for pattern in REFERENCE_PATTERNS:
        for m in pattern.finditer(body):
            matches.append((m.start(1), m.group(1)))
    matches.sort(key=lambda pair: pair[0])
    return [label for _, label in matches]


def _slugify(title: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", title.lower()).strip("-")
    return slug or "section"


def parse_document(text: str, doc_id: str, domain: str) -> DocumentTree:
    """Parse heading-structured text into a DocumentTree.

    A heading more than one level deeper than its open ancestor is an
    error; empty input is an error. Cross-references are detected in every
    node body but left unresolved (see resolve_references).
    """
    if domain not in DOMAINS:
        raise ValueError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    if not text.strip():
        raise DocumentFormatError("empty document")

    root = SectionNode(node_id=f"{doc_id}:root", title=doc_id, level=0)
    lookup: dict[str, SectionNode] = {root.node_id: root}
    stack: list[SectionNode] = [root]
    body_lines: dict[str, list[str]] = {root.node_id: []}

    for line_no, line in enumerate(text.splitlines(), start=1):
        match = _HEADING.match(line)
        if match is None:
            body_lines[stack[-1].node_id].append(line)
            continue

        level = len(match.group(1))
        title = match.group(2).strip()
        if level > stack[-1].level + 1:
            raise DocumentFormatError(
                f"heading level {level} jumps past level {stack[-1].level}",
                line_number=line_no,
            )
        while stack[-1].level >= level:
            stack.pop()

        if match.group(3):
            node_id = match.group(3)
        else:
            base = f"{doc_id}:{_slugify(title)}"
            node_id = base
            bump = 2
            while node_id in lookup:
                node_id = f"{base}-{bump}"
                bump += 1
        if node_id in lookup:
            raise DocumentFormatError(
                f"duplicate node id {node_id!r}", line_number=line_no
            )

        node = SectionNode(node_id=node_id, title=title, level=level)
        stack[-1].children.append(node)
        stack.append(node)
        lookup[node_id] = node
        body_lines[node_id] = []

    for node_id, lines in body_lines.items():
        node = lookup[node_id]
        node.body = "\n".join(lines).strip()
        node.cross_refs = [
            CrossReference(source_node_id=node_id, target_label=label)
            for label in detect_cross_references(node.body)
        ]

    return DocumentTree(doc_id=doc_id, domain=domain, root=root, node_lookup=lookup)


def _label_matches_title(label: str, title: str) -> bool:
    low_title = title.lower()
    low_label = label.lower()
    if low_title == low_label:
        return True
    if low_title.startswith(low_label):
        boundary = low_title[len(low_label)]
        return not boundary.isalnum()
    return False


def resolve_references(tree: DocumentTree) -> DocumentTree:
    """Fill resolved_target_id on each cross-reference where a node title
    matches the label (case-insensitive prefix at a word boundary).

    Ambiguous labels resolve to the first node in document order and are
    noted in resolution_diagnostics. Idempotent; never reorders refs.
    """
    ordered = tree.document_order()
    tree.resolution_diagnostics.clear()
    for node in ordered:
        for ref in node.cross_refs:
            candidates = [n for n in ordered if _label_matches_title(ref.target_label, n.title)]
            if not candidates:
                ref.resolved_target_id = None
                continue
            if len(candidates) > 1:
                tree.resolution_diagnostics.append(
                    f"label {ref.target_label!r} in {node.node_id} is ambiguous: "
                    + ", ".join(c.node_id for c in candidates)
                )
            ref.resolved_target_id = candidates[0].node_id
    return tree


def flatten_sections(tree: DocumentTree) -> list[tuple[str, str, str]]:
    """Pre-order (node_id, title, body) triples, root excluded."""
    return [
        (node.node_id, node.title, node.body)
        for node in tree.document_order()
        if node is not tree.root
    ]


def serialize_document(tree: DocumentTree) -> str:
    """Re-serialize a tree through the corpus file format."""
    lines = [f"doc_id: {tree.doc_id}", f"domain: {tree.domain}", ""]
    if tree.root.body:
        lines.append(tree.root.body)
        lines.append("")
    for node in tree.document_order():
        if node is tree.root:
            continue
        lines.append(f"{'#' * node.level} {node.title}")
        if node.body:
            lines.append(node.body)
        lines.append("")
    return "\n".join(lines)


def load_document_file(path: str | Path) -> DocumentTree:
    """Parse one corpus file: front block, then the document body."""
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    lines = raw.splitlines()
    meta: dict[str, str] = {}
    idx = 0
    for idx, line in enumerate(lines):
        if not line.strip():
            break
        if ":" not in line:
            raise DocumentFormatError(
                f"malformed front-matter line in {path}", line_number=idx + 1
            )
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()
    else:
        idx = len(lines)

    doc_id = meta.get("doc_id")
    domain = meta.get("domain")
    if not doc_id or not domain:
        raise DocumentFormatError(f"{path}: front block must set doc_id and domain")
    body = "\n".join(lines[idx + 1 :])
    tree = parse_document(body, doc_id=doc_id, domain=domain)
    return resolve_references(tree)


@dataclass
class Corpus:
    """A set of resolved document trees with corpus-wide unique node ids."""

    docs: dict[str, DocumentTree] = field(default_factory=dict)

    def add(self, tree: DocumentTree) -> None:
        if tree.doc_id in self.docs:
            raise ValueError(f"duplicate doc_id {tree.doc_id!r}")
        for node_id in tree.node_lookup:
            if self.find_node(node_id) is not None:
                raise ValueError(f"node id {node_id!r} collides across documents")
        self.docs[tree.doc_id] = tree

    def find_node(self, node_id: str) -> SectionNode | None:
        for tree in self.docs.values():
            node = tree.node_lookup.get(node_id)
            if node is not None:
                return node
        return None

    def all_node_ids(self) -> set[str]:
        ids: set[str] = set()
        for tree in self.docs.values():
            ids.update(tree.node_lookup)
        return ids


def load_corpus(directory: str | Path) -> Corpus:
    """Load every ``<domain>/<doc>.md`` file beneath a corpus directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    corpus = Corpus()
    for path in sorted(directory.glob("*/*.md")):
        corpus.add(load_document_file(path))
    if not corpus.docs:
        raise DocumentFormatError(f"no corpus documents found under {directory}")
    return corpus


def bundled_corpus_dir() -> Path:
    return Path(__file__).parent / "data" / "corpus"


def bundled_benchmark_path() -> Path:
    return Path(__file__).parent / "data" / "benchmark.jsonl"
