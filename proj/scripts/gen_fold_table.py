#!/usr/bin/env python3
"""Regenerates include/joinscout/detail/fold_table.hpp.

Each entry maps a non-ASCII code point to the ASCII letter or digit left
after lowercasing, canonical decomposition, and dropping combining marks.
Code points that leave nothing ASCII are absent and get deleted.
"""
import sys
import unicodedata

def fold(cp):
    s = unicodedata.normalize("NFD", chr(cp).lower())
    s = "".join(ch for ch in s if not unicodedata.combining(ch))
    if len(s) == 1 and (("a" <= s <= "z") or ("0" <= s <= "9")):
        return s
    return None

entries = [(cp, fold(cp)) for cp in range(0x80, 0x30000)
           if not (0xD800 <= cp <= 0xDFFF) and fold(cp) is not None]
spaces = [cp for cp in range(0x80, 0x30000)
          if not (0xD800 <= cp <= 0xDFFF) and chr(cp).isspace()]

out = sys.stdout
out.write("// Generated by scripts/gen_fold_table.py (unicodedata %s). Do not edit.\n"
          % unicodedata.unidata_version)
out.write("#pragma once\n\n#include <array>\n#include <cstdint>\n#include <utility>\n\n")
out.write("namespace joinscout::detail {\n\n")
out.write("inline constexpr std::array<std::pair<char32_t, char>, %d> kFoldTable{{\n" % len(entries))
for cp, ch in entries:
    out.write("    {0x%04X, '%s'},\n" % (cp, ch))
out.write("}};\n\n")
out.write("inline constexpr std::array<char32_t, %d> kUnicodeSpaces{{\n   " % len(spaces))
out.write(",".join(" 0x%04X" % cp for cp in spaces))
out.write("}};\n\n} // namespace joinscout::detail\n")
