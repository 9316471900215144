"""Binary character matrices: languages x syntactic parameters.

Cells hold ``0``, ``1`` or :data:`UNMAPPED` (``None``). Missing data is kept
as its own state and is never folded into ``0``.

Two text encodings are supported:

* pipe-separated records, one ``language|property|value`` per line, with an
  optional ``language|property|value`` header line;
* JSON objects of the form ``{"language": {"parameter": 0 | 1, ...}, ...}``.
"""

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

__all__ = [
    "UNMAPPED",
    "CharacterMatrix",
    "CharacterDataError",
    "ParseError",
    "ConflictError",
    "UnknownLanguageError",
    "parse_csv",
    "parse_json",
    "to_csv",
    "to_json",
    "load_matrix",
    "restrict",
    "fully_mapped",
    "coverage",
]

UNMAPPED = None

_VALUE_WORDS = {"0": 0, "1": 1, "no": 0, "yes": 1}
_HEADER = ("language", "property", "value")


class CharacterDataError(ValueError):
    pass


class ParseError(CharacterDataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConflictError(ParseError):
    pass


class UnknownLanguageError(CharacterDataError, KeyError):
    def __str__(self):
        return str(self.args[0])


@dataclass(frozen=True)
class CharacterMatrix:
    """Languages x parameters grid of 0/1/UNMAPPED cells.

    ``values[i][j]`` is the state of parameter ``parameters[j]`` in language
    ``languages[i]``.
    """

    languages: tuple
    parameters: tuple
    values: tuple

    def __post_init__(self):
        langs = tuple(self.languages)
        params = tuple(self.parameters)
        rows = tuple(tuple(row) for row in self.values)
        object.__setattr__(self, "languages", langs)
        object.__setattr__(self, "parameters", params)
        object.__setattr__(self, "values", rows)

        for kind, ids in (("language", langs), ("parameter", params)):
            for ident in ids:
                if not isinstance(ident, str) or not ident:
                    raise CharacterDataError(f"{kind} identifiers must be non-empty strings, got {ident!r}")
            if len(set(ids)) != len(ids):
                dupes = sorted({x for x in ids if ids.count(x) > 1})
                raise CharacterDataError(f"duplicate {kind} identifiers: {', '.join(dupes)}")
        if len(rows) != len(langs):
            raise CharacterDataError(f"expected {len(langs)} rows, got {len(rows)}")
        for lang, row in zip(langs, rows):
            if len(row) != len(params):
                raise CharacterDataError(f"row {lang!r} has {len(row)} cells, expected {len(params)}")
            for param, cell in zip(params, row):
                if cell is not UNMAPPED and (type(cell) is not int or cell not in (0, 1)):
                    raise CharacterDataError(f"cell {lang}/{param} must be 0, 1 or UNMAPPED, got {cell!r}")

    @property
    def shape(self):
        return len(self.languages), len(self.parameters)

    def row(self, lang):
        return self.values[self._lang_index(lang)]

    def column(self, param):
        try:
            j = self.parameters.index(param)
        except ValueError:
            raise CharacterDataError(f"unknown parameter {param!r}") from None
        return tuple(row[j] for row in self.values)

    def get(self, lang, param):
        return self.row(lang)[self.parameters.index(param)]

    def is_fully_mapped(self):
        return all(cell is not UNMAPPED for row in self.values for cell in row)

    def _lang_index(self, lang):
        try:
            return self.languages.index(lang)
        except ValueError:
            raise UnknownLanguageError(f"unknown language {lang!r}") from None


def _decode(text):
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    return text


def _parse_value(raw):
    value = _VALUE_WORDS.get(raw.strip().lower())
    if value is None:
        raise ValueError(raw)
    return value


def parse_csv(text):
    """Parse ``language|property|value`` records.

    >>> m = parse_csv("L1|P1|1\\nL1|P2|0\\nL2|P1|yes")
    >>> m.values
    ((1, 0), (1, None))
    """
    text = _decode(text)
    records = []
    seen_content = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = [field.strip() for field in line.split("|")]
        if len(fields) != 3:
            raise ParseError(f"expected 3 pipe-separated fields, got {len(fields)}", lineno)
        if not seen_content:
            seen_content = True
            if tuple(f.lower() for f in fields) == _HEADER:
                continue
        lang, param, raw = fields
        if not lang or not param:
            raise ParseError("empty language or property name", lineno)
        try:
            value = _parse_value(raw)
        except ValueError:
            raise ParseError(f"value for {lang}/{param} must be 0, 1, yes or no, got {raw!r}", lineno) from None
        records.append((lang, param, value, lineno))
    if not records:
        raise ParseError("no records in input")

    langs, params, cells = {}, {}, {}
    for lang, param, value, lineno in records:
        langs.setdefault(lang, None)
        params.setdefault(param, None)
        old = cells.setdefault((lang, param), value)
        if old != value:
            raise ConflictError(f"conflicting values for {lang}/{param}: {old} and {value}", lineno)
    values = [[cells.get((lang, param), UNMAPPED) for param in params] for lang in langs]
    return CharacterMatrix(tuple(langs), tuple(params), values)


def parse_json(text):
    """Parse a ``{language: {parameter: value}}`` JSON document.

    Values may be ``0``/``1``, the strings ``"0"``, ``"1"``, ``"yes"``,
    ``"no"``, or ``null`` for an explicitly unmapped cell.
    """
    text = _decode(text)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(data, dict):
        raise ParseError(f"top level must be an object, got {type(data).__name__}")
    if not data:
        raise ParseError("no languages in input")

    langs, params, cells = [], {}, {}
    for raw_lang, entries in data.items():
        lang = raw_lang.strip()
        if not lang:
            raise ParseError("empty language name")
        if lang in cells:
            raise ConflictError(f"language {lang!r} appears twice")
        if not isinstance(entries, dict):
            raise ParseError(f"value of {lang!r} must be an object of parameters")
        langs.append(lang)
        cells[lang] = {}
        for raw_param, raw_value in entries.items():
            param = raw_param.strip()
            if not param:
                raise ParseError(f"empty parameter name under {lang!r}")
            params.setdefault(param, None)
            if raw_value is None:
                continue
            if isinstance(raw_value, bool) or not isinstance(raw_value, (int, str)):
                raise ParseError(f"non-binary value at {lang}/{param}: {raw_value!r}")
            try:
                value = _parse_value(str(raw_value))
            except ValueError:
                raise ParseError(f"non-binary value at {lang}/{param}: {raw_value!r}") from None
            if cells[lang].setdefault(param, value) != value:
                raise ConflictError(f"conflicting values for {lang}/{param}")
    values = [[cells[lang].get(param, UNMAPPED) for param in params] for lang in langs]
    return CharacterMatrix(tuple(langs), tuple(params), values)


def to_csv(m: CharacterMatrix, header=False):
    """Canonical pipe-separated form, row-major, unmapped cells omitted."""
    lines = ["language|property|value"] if header else []
    for lang, row in zip(m.languages, m.values):
        for param, cell in zip(m.parameters, row):
            if cell is not UNMAPPED:
                lines.append(f"{lang}|{param}|{cell}")
    return "\n".join(lines) + "\n"


def to_json(m: CharacterMatrix, indent=None):
    data = {
        lang: {param: cell for param, cell in zip(m.parameters, row) if cell is not UNMAPPED}
        for lang, row in zip(m.languages, m.values)
    }
    return json.dumps(data, indent=indent, ensure_ascii=False) + "\n"


def load_matrix(text):
    """Parse either encoding, choosing JSON when the text opens with ``{``."""
    text = _decode(text)
    if text.lstrip().startswith("{"):
        return parse_json(text)
    return parse_csv(text)


def restrict(m: CharacterMatrix, langs: Sequence[str]):
    """Keep only ``langs``, in the order given."""
    idx = [m._lang_index(lang) for lang in langs]
    return CharacterMatrix(tuple(langs), m.parameters, [m.values[i] for i in idx])


def fully_mapped(m: CharacterMatrix):
    """Drop every parameter that is unmapped for at least one language."""
    keep = [j for j in range(len(m.parameters)) if all(row[j] is not UNMAPPED for row in m.values)]
    return CharacterMatrix(
        m.languages,
        tuple(m.parameters[j] for j in keep),
        [tuple(row[j] for j in keep) for row in m.values],
    )


def coverage(m: CharacterMatrix, lang: str):
    """Mapped fraction of ``lang``'s row as a :class:`~fractions.Fraction`."""
    row = m.row(lang)
    if not row:
        return Fraction(0)
    return Fraction(sum(cell is not UNMAPPED for cell in row), len(row))
