"""Structured diagnostic reports: named scalars, flags with witnesses, nesting.

Rendered as indented ``key: value`` text; every pass/fail flag carries the
datum that witnessed it.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def format_scalar(value) -> str:
    if isinstance(value, complex):
        return f"{value.real:.12g}{value.imag:+.12g}i"
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_scalar(v) for v in value) + "]"
    return str(value)


@dataclass
class Flag:
    name: str
    ok: bool
    witness: str

    def render(self) -> str:
        return f"{self.name}: {'pass' if self.ok else 'FAIL'} ({self.witness})"


@dataclass
class DiagnosticsReport:
    name: str
    values: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    sections: list = field(default_factory=list)

    def add_value(self, key: str, value) -> None:
        self.values[key] = value

    def add_flag(self, name: str, ok: bool, witness: str) -> None:
        self.flags.append(Flag(name, bool(ok), witness))

    def add_section(self, section: "DiagnosticsReport") -> None:
        self.sections.append(section)

    @property
    def all_ok(self) -> bool:
        return all(f.ok for f in self.flags) and all(s.all_ok for s in self.sections)

    def render(self, indent: int = 0) -> str:
        pad = "  " * indent
        lines = [f"{pad}{self.name}:"]
        for key, value in self.values.items():
            lines.append(f"{pad}  {key}: {format_scalar(value)}")
        for flag in self.flags:
            lines.append(f"{pad}  {flag.render()}")
        for section in self.sections:
            lines.append(section.render(indent + 1))
        return "\n".join(lines)
