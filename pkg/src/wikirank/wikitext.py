"""Dump ingestion and wikitext parsing.

Two concerns live here: streaming page records out of a MediaWiki XML export
(or a JSON-lines stand-in), and turning one page's wikitext into the
structure the rankers consume: redirect flag, distinct link targets,
top-level infoboxes, journal citations and markup-free text.

Nothing here expands templates. Parsing is total: malformed markup produces
warnings on the page record, never an exception.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import BinaryIO, Iterator, NamedTuple
from xml.parsers import expat

from .titles import canonicalize_title

log = logging.getLogger(__name__)

CITATION_TEMPLATES = frozenset(
    {"citation", "cite journal", "vancite journal", "vcite journal"}
)

_CHUNK = 1 << 16


@dataclass(frozen=True)
class RawPage:
    title: str
    namespace: int
    text: str

    def __post_init__(self):
        if not self.title:
            raise ValueError("page title must be non-empty")


class Infobox(NamedTuple):
    name: str
    attributes: dict


@dataclass(frozen=True)
class CitationRef:
    template_name: str
    journal_name_raw: str
    citing_title: str


@dataclass(frozen=True)
class ParsedPage:
    title: str
    is_redirect: bool = False
    redirect_target: str | None = None
    infoboxes: tuple = ()
    outgoing_links: frozenset = frozenset()
    citations: tuple = ()
    plain_text: str = ""
    namespace: int = 0
    warnings: tuple = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "namespace": self.namespace,
            "is_redirect": self.is_redirect,
            "redirect_target": self.redirect_target,
            "infoboxes": [[b.name, dict(sorted(b.attributes.items()))] for b in self.infoboxes],
            "outgoing_links": sorted(self.outgoing_links),
            "citations": [[c.template_name, c.journal_name_raw] for c in self.citations],
            "plain_text": self.plain_text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParsedPage":
        title = d["title"]
        return cls(
            title=title,
            is_redirect=d["is_redirect"],
            redirect_target=d["redirect_target"],
            infoboxes=tuple(Infobox(n, dict(a)) for n, a in d["infoboxes"]),
            outgoing_links=frozenset(d["outgoing_links"]),
            citations=tuple(CitationRef(t, j, title) for t, j in d["citations"]),
            plain_text=d["plain_text"],
            namespace=d["namespace"],
        )


class DumpFormatError(ValueError):
    """Raised when a dump cannot be decoded.

    ``page_index`` is the 0-based index of the last page that was read
    completely (-1 when none was).
    """

    def __init__(self, message: str, byte_offset: int, page_index: int):
        super().__init__(
            f"{message} at byte {byte_offset} (last complete page index {page_index})"
        )
        self.byte_offset = byte_offset
        self.page_index = page_index


# --------------------------------------------------------------------------
# dump readers


def parse_dump(stream: BinaryIO) -> Iterator[RawPage]:
    """Yield pages from a MediaWiki XML export or a JSON-lines file.

    The format is picked from the first non-whitespace byte. Records come out
    in file order and only the page being read is held in memory.
    """
    head = b""
    while True:
        chunk = stream.read(_CHUNK)
        if not chunk:
            break
        head += chunk
        if head.strip():
            break
    first = head.lstrip()[:1]
    if not first:
        return
    if first == b"<":
        yield from _parse_xml(head, stream)
    elif first == b"{":
        yield from _parse_jsonl(head, stream)
    else:
        raise DumpFormatError(f"unrecognized dump format (first byte {first!r})", 0, -1)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1] if "}" in tag else tag.rsplit(" ", 1)[-1]


def _parse_xml(head: bytes, stream: BinaryIO) -> Iterator[RawPage]:
    parser = expat.ParserCreate(namespace_separator=" ")
    parser.buffer_text = True
    ready: list[RawPage] = []
    path: list[str] = []
    cur: dict = {}
    buf: list[str] = []
    count = 0

    def start(name, attrs):
        tag = _local(name)
        path.append(tag)
        if tag == "page":
            cur.clear()
        buf.clear()

    def end(name):
        nonlocal count
        tag = path.pop()
        parent = path[-1] if path else ""
        if tag in ("title", "ns") and parent == "page":
            cur[tag] = "".join(buf)
        elif tag == "text" and parent == "revision":
            # keep the last revision's text when a page carries several
            cur["text"] = "".join(buf)
        elif tag == "page":
            try:
                ns = int(cur.get("ns", "0").strip() or 0)
            except ValueError:
                ns = 0
            title = cur.get("title", "").strip()
            if title:
                ready.append(RawPage(title, ns, cur.get("text", "")))
            else:
                log.warning("page %d: missing title, skipped", count)
            count += 1
        buf.clear()

    def chars(data):
        buf.append(data)

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars

    data = head
    while True:
        try:
            parser.Parse(data, not data)
        except expat.ExpatError as exc:
            yield from ready
            raise DumpFormatError(
                f"malformed XML ({expat.ErrorString(exc.code)})",
                parser.ErrorByteIndex,
                count - 1,
            ) from None
        yield from ready
        ready.clear()
        if not data:
            return
        data = stream.read(_CHUNK)


def _parse_jsonl(head: bytes, stream: BinaryIO) -> Iterator[RawPage]:
    offset = 0
    index = 0
    pending = head
    while True:
        chunk = stream.read(_CHUNK)
        pending += chunk
        lines = pending.split(b"\n")
        pending = lines.pop() if chunk else b""
        for line in lines:
            stripped = line.strip()
            if stripped:
                try:
                    obj = json.loads(stripped)
                    page = RawPage(str(obj["title"]), int(obj.get("ns", 0)), obj.get("text") or "")
                except (ValueError, KeyError, TypeError) as exc:
                    raise DumpFormatError(f"malformed JSON line ({exc})", offset, index - 1) from None
                yield page
                index += 1
            offset += len(line) + 1
        if not chunk:
            return


# --------------------------------------------------------------------------
# wikitext


_COMMENT = re.compile(r"<!--.*?(?:-->|\Z)", re.S)
_NOWIKI = re.compile(r"<nowiki\s*>(.*?)</nowiki\s*>|<nowiki\s*/>", re.S | re.I)
_REF = re.compile(r"<ref\b[^>]*/>|<ref\b[^>]*>.*?(?:</ref\s*>|\Z)", re.S | re.I)
_TAG = re.compile(r"</?[a-zA-Z][^<>]*/?>")
_LINK = re.compile(r"\[\[([^\[\]|]*)(?:\|([^\[\]]*))?\]\]")
_REDIRECT = re.compile(r"\A\s*#REDIRECT\s*:?\s*\[\[([^\[\]|]*)(?:\|[^\[\]]*)?\]\]", re.I)
_QUOTES = re.compile(r"'{2,}")
_HSPACE = re.compile(r"[ \t\r\f\v]+")
_BLANKS = re.compile(r"\n{3,}")
_WS = re.compile(r"\s+")


def _link_target(raw: str) -> str | None:
    target = raw.strip().lstrip(":")
    try:
        return canonicalize_title(target)
    except ValueError:
        return None


def extract_links(text: str) -> set[str]:
    """Distinct canonical targets of the ``[[...]]`` links in ``text``."""
    masked = _NOWIKI.sub(" ", _COMMENT.sub(" ", text))
    links = set()
    for lm in _LINK.finditer(masked):
        target = _link_target(lm.group(1))
        if target is not None:
            links.add(target)
    return links


def _template_spans(text: str, warnings: list) -> list[tuple[int, int]]:
    """Top-level ``{{...}}`` spans as (start, end) offsets, end exclusive.

    An unclosed template runs to the end of the text.
    """
    spans = []
    depth = 0
    start = 0
    i = 0
    n = len(text)
    while i < n - 1:
        pair = text[i:i + 2]
        if pair == "{{":
            if depth == 0:
                start = i
            depth += 1
            i += 2
        elif pair == "}}":
            if depth == 0:
                warnings.append(f"stray '}}}}' at offset {i}")
            else:
                depth -= 1
                if depth == 0:
                    spans.append((start, i + 2))
            i += 2
        else:
            i += 1
    if depth:
        warnings.append(f"unbalanced braces: template at offset {start} closed at end of text")
        spans.append((start, n))
    return spans


def _split_parts(body: str) -> list[str]:
    parts = []
    depth_t = depth_l = 0
    last = 0
    i = 0
    n = len(body)
    while i < n:
        pair = body[i:i + 2]
        if pair == "{{":
            depth_t += 1
            i += 2
        elif pair == "}}":
            depth_t = max(0, depth_t - 1)
            i += 2
        elif pair == "[[":
            depth_l += 1
            i += 2
        elif pair == "]]":
            depth_l = max(0, depth_l - 1)
            i += 2
        else:
            if body[i] == "|" and depth_t == 0 and depth_l == 0:
                parts.append(body[last:i])
                last = i + 1
            i += 1
    parts.append(body[last:])
    return parts


def _template_name(raw: str) -> str:
    name = _WS.sub(" ", raw.replace("_", " ")).strip().lower()
    if name.startswith("template:"):
        name = name[len("template:"):].strip()
    return name


def _attribute_key(raw: str) -> str:
    return _WS.sub(" ", raw).strip().lower().replace(" ", "_")


def _named_args(parts: list[str]) -> dict:
    args = {}
    for part in parts:
        if "=" not in part:
            continue
        # '=' inside a nested template or link belongs to the value
        head = _split_parts_eq(part)
        if head is None:
            continue
        key = _attribute_key(part[:head])
        if key:
            args[key] = part[head + 1:].strip()
    return args


def _split_parts_eq(part: str) -> int | None:
    depth = 0
    i = 0
    while i < len(part):
        pair = part[i:i + 2]
        if pair in ("{{", "[["):
            depth += 1
            i += 2
            continue
        if pair in ("}}", "]]"):
            depth = max(0, depth - 1)
            i += 2
            continue
        if part[i] == "=" and depth == 0:
            return i
        i += 1
    return None


def _iter_templates(text: str, warnings: list, top: bool = True):
    """Yield (name, parts, is_top_level) for every template, nested ones included."""
    for start, end in _template_spans(text, warnings):
        closed = text.endswith("}}", start, end) and end - start >= 4
        body = text[start + 2:end - 2] if closed else text[start + 2:end]
        parts = _split_parts(body)
        yield _template_name(parts[0]), parts[1:], top
        if "{{" in body:
            yield from _iter_templates(body, [], top=False)


def _decode_entities(text: str) -> str:
    return (
        text.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", '"')
        .replace("&amp;", "&")
    )


def _strip_templates(text: str) -> str:
    spans = _template_spans(text, [])
    if not spans:
        return text
    out = []
    last = 0
    for start, end in spans:
        out.append(text[last:start])
        out.append(" ")
        last = end
    out.append(text[last:])
    return "".join(out)


def _unlink(match: re.Match) -> str:
    target, label = match.group(1), match.group(2)
    if label is None:
        # unlabelled links display their target with underscores as spaces
        return target.lstrip(":").replace("_", " ")
    return label.rsplit("|", 1)[-1]


def to_plain_text(text: str) -> str:
    """Strip comments, refs, templates, tags and link markup (keeping labels)."""
    saved: list[str] = []

    def stash(m: re.Match) -> str:
        saved.append(m.group(1) or "")
        return f"\x00{len(saved) - 1}\x00"

    text = _COMMENT.sub(" ", text)
    text = _NOWIKI.sub(stash, text)
    text = _REF.sub(" ", text)
    text = _strip_templates(text)
    prev = None
    while prev != text:
        prev = text
        text = _LINK.sub(_unlink, text)
    text = _TAG.sub(" ", text)
    text = _QUOTES.sub("", text)
    text = _decode_entities(text)
    if saved:
        text = re.sub("\x00(\\d+)\x00", lambda m: saved[int(m.group(1))], text)
    lines = (_HSPACE.sub(" ", line).strip() for line in text.split("\n"))
    return _BLANKS.sub("\n\n", "\n".join(lines)).strip()


def parse_wikitext(title: str, text: str, namespace: int = 0) -> ParsedPage:
    """Extract the structured view of one page.

    Link targets are canonicalized with anchors dropped and deduplicated.
    Infoboxes are top-level templates named ``infobox...``; citations are the
    four journal citation templates, at any nesting depth, carrying a
    non-empty ``journal`` argument.
    """
    if not title:
        raise ValueError("title must be non-empty")
    warnings: list[str] = []
    if "<!--" in text and not re.search(r"<!--.*?-->", text, re.S):
        warnings.append("unclosed HTML comment")

    m = _REDIRECT.match(text)
    if m:
        target = _link_target(m.group(1))
        if target is not None:
            return ParsedPage(title=title, is_redirect=True, redirect_target=target,
                              namespace=namespace)

    masked = _NOWIKI.sub(" ", _COMMENT.sub(" ", text))

    links = extract_links(masked)

    infoboxes = []
    citations = []
    for name, parts, is_top in _iter_templates(masked, warnings):
        if is_top and name.startswith("infobox"):
            infoboxes.append(Infobox(name, _named_args(parts)))
        elif name in CITATION_TEMPLATES:
            journal = _named_args(parts).get("journal", "").strip()
            if journal:
                citations.append(CitationRef(name, journal, title))

    for w in warnings:
        log.warning("%s: %s", title, w)

    return ParsedPage(
        title=title,
        infoboxes=tuple(infoboxes),
        outgoing_links=frozenset(links),
        citations=tuple(citations),
        plain_text=to_plain_text(text),
        namespace=namespace,
        warnings=tuple(warnings),
    )
