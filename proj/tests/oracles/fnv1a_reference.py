#!/usr/bin/env python3
# Standalone FNV-1a 64-bit reference used to freeze tokenizer test vectors.
import sys

OFFSET = 0xCBF29CE484222325
PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = OFFSET
    for b in data:
        h ^= b
        h = (h * PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


if __name__ == "__main__":
    vocab = int(sys.argv[1]) if len(sys.argv) > 1 else 4096
    for word in ["", "a", "red", "cube", "change", "the", "color", "to", "blue"]:
        h = fnv1a64(word.encode("utf-8"))
        print(f"{word!r:10} 0x{h:016x} {h % vocab}")
