from __future__ import annotations

from .ast import Choice, Continue, GlobalProtocol, Interaction, MessageSignature, Rec, Transfer

INDENT = "  "


def format_signature(sig: MessageSignature) -> str:
    items = ", ".join(p.sort if p.name is None else f"{p.sort}:{p.name}" for p in sig.payload)
    return f"{sig.label}({items})"


def _lines(body: tuple[Interaction, ...], depth: int) -> list[str]:
    pad = INDENT * depth
    out: list[str] = []
    for item in body:
        if isinstance(item, Transfer):
            out.append(
                f"{pad}{format_signature(item.sig)} from {item.src} to {', '.join(item.dsts)};"
            )
        elif isinstance(item, Continue):
            out.append(f"{pad}continue {item.var};")
        elif isinstance(item, Rec):
            out.append(f"{pad}rec {item.var} {{")
            out.extend(_lines(item.body, depth + 1))
            out.append(f"{pad}}}")
        elif isinstance(item, Choice):
            out.append(f"{pad}choice at {item.at} {{")
            for k, branch in enumerate(item.branches):
                if k:
                    out.append(f"{pad}}} or {{")
                out.extend(_lines(branch, depth + 1))
            out.append(f"{pad}}}")
        else:  # pragma: no cover
            raise TypeError(f"not an interaction: {item!r}")
    return out


def pretty(p: GlobalProtocol) -> str:
    """Render a protocol back to source; output is byte-stable per tree."""
    roles = ", ".join(f"role {r}" for r in p.roles)
    lines = [f"global protocol {p.name}({roles}) {{"]
    lines.extend(_lines(p.body, 1))
    lines.append("}")
    return "\n".join(lines) + "\n"
