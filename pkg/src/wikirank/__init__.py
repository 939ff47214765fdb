"""Ranking universities and journals from Wikipedia link, view, infobox and citation signals."""

__version__ = "0.1.0"
