import logging
from pathlib import Path

import pytest

from wikirank.corpus import (
    PageviewTally,
    aggregate_pageviews,
    build_store,
    load_type_map,
    parse_pages,
    read_pageview_file,
)
from wikirank.wikitext import parse_dump

ROOT = Path(__file__).resolve().parents[1]
TINY = ROOT / "fixtures" / "tiny"
SYNTH = ROOT / "fixtures" / "synth"
UNIVERSITIES = ["Harvard University", "Massachusetts Institute of Technology", "Stanford University",
                "University of Toronto", "Yale University"]


def load_tiny():
    with open(TINY / "dump.xml", "rb") as fh:
        store = build_store(parse_pages(parse_dump(fh)), load_type_map(TINY / "type_map.tsv"))
    tally = PageviewTally()
    for path in sorted((TINY / "pageviews").iterdir()):
        aggregate_pageviews(store, read_pageview_file(path, tally), tally=tally)
    return store.with_views(tally.views), tally


@pytest.fixture(scope="session")
def tiny():
    return load_tiny()


@pytest.fixture(scope="session")
def tiny_store(tiny):
    return tiny[0]


_LOGGER = logging.getLogger("wikirank")
_PRISTINE = (list(_LOGGER.handlers), _LOGGER.level, _LOGGER.propagate)


@pytest.fixture(autouse=True)
def _restore_wikirank_logger():
    # cli.main reconfigures the package logger (possibly inside a wider-scoped
    # fixture); put it back so caplog sees records in every test
    _LOGGER.handlers[:], _LOGGER.level, _LOGGER.propagate = _PRISTINE
    yield
    _LOGGER.handlers[:], _LOGGER.level, _LOGGER.propagate = _PRISTINE
