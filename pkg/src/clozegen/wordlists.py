"""Bundled closed-class word list.

Used as the FUNC class by the builtin POS tagger and as the stopword list of
the builtin fill-mask predictor. Deliberately small: anything open-class is
handled by suffix rules or defaults instead.
"""

from __future__ import annotations

FUNCTION_WORDS: frozenset[str] = frozenset(
    """
    a an the this that these those some any each every either neither no
    i you he she it we they me him her us them mine yours his hers ours theirs
    my your its our their myself yourself himself herself itself ourselves themselves
    who whom whose which what when where why how
    and or but nor yet so if because although though while unless until since
    as than whether once whenever wherever
    of in on at by for with about against between into through during before
    after above below to from up down out off over under again further then
    across along around behind beside beyond inside near outside toward upon
    within without per via
    is am are was were be been being do does did doing have has had having
    will would shall should may might must can could ought
    not only just also very too quite rather there here now
    """.split()
)
