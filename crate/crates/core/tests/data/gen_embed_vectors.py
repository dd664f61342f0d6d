"""Reference vectors for the local hashed n-gram embedder.

Written from the format description only; shares no code with the Rust side.
Run from this directory: python3 gen_embed_vectors.py > embed_vectors.json
"""
import json
import math
import struct

MASK = (1 << 64) - 1


def fnv1a64(data: bytes, h: int = 0xCBF29CE484222325) -> int:
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


def embed(text: str, dim: int, lo: int, hi: int):
    chars = " ".join(text.lower().split())
    acc = [0.0] * dim
    for n in range(lo, hi + 1):
        for i in range(len(chars) - n + 1):
            g = chars[i : i + n].encode("utf-8")
            sign = -1.0 if fnv1a64(b"\xff" + g) >> 63 else 1.0
            acc[fnv1a64(g) % dim] += sign
    norm = math.sqrt(sum(v * v for v in acc))
    if norm == 0.0:
        return acc
    return [struct.unpack("<f", struct.pack("<f", v / norm))[0] for v in acc]


CASES = [
    ("", 256, 3, 5),
    ("   \t\n ", 256, 3, 5),
    ("hi", 256, 3, 5),
    ("abc", 256, 3, 5),
    ("Hello, world!", 256, 3, 5),
    ("hello,   WORLD!", 256, 3, 5),
    ("Write a Python function to reverse a linked list", 256, 3, 5),
    ("help me write an email to my landlord about the broken heater", 256, 3, 5),
    ("Escribe un cuento corto sobre un dragón que teme al fuego", 256, 3, 5),
    ("¿Cuál es la derivada de x² · sin(x)?", 256, 3, 5),
    ("Ünïcödé façade naïve café", 256, 3, 5),
    ("日本語のテキストを要約してください", 256, 3, 5),
    ("emoji 🙂🚀 test 🚀🙂", 256, 3, 5),
    ("ΟΔΟΣ final sigma ΣΑΣ", 256, 3, 5),
    ("aaaaaaaaaaaaaaaaaaaaaaaaaaaaaa", 256, 3, 5),
    ("solve 2x + 3 = 11 for x", 64, 3, 5),
    ("solve 2x + 3 = 11 for x", 1024, 3, 5),
    ("tell me a story about a brave knight", 256, 1, 2),
    ("tell me a story about a brave knight", 32, 4, 4),
    ("Résumé:\n\n- point one\n- point two", 128, 2, 6),
]


def main():
    out = [
        {"text": t, "dimension": d, "ngram_range": [lo, hi], "values": embed(t, d, lo, hi)}
        for (t, d, lo, hi) in CASES
    ]
    print(json.dumps(out, ensure_ascii=False))


if __name__ == "__main__":
    main()
