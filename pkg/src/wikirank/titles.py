"""Title canonicalization shared by the parser, the store and the CSV loaders."""
import re

_WS = re.compile(r"\s+")


def canonicalize_title(raw: str) -> str:
    """Normalize a page title the way MediaWiki resolves link targets.

    Underscores become spaces, whitespace runs collapse, the section anchor
    is dropped and the first character is upper-cased.

    >>> canonicalize_title("harvard_University")
    'Harvard University'
    >>> canonicalize_title("MIT#History")
    'MIT'
    """
    title = raw.split("#", 1)[0]
    title = _WS.sub(" ", title.replace("_", " ")).strip()
    if not title:
        raise ValueError("empty title")
    return title[0].upper() + title[1:]
