"""Regenerate the bundled synthetic review corpora (deterministic)."""

import csv
import random
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "src" / "hashtaggen" / "data"

ADJECTIVES = [
    "otimo", "excelente", "bom", "ruim", "pessimo", "lindo", "perfeito",
    "rapido", "lento", "barato", "caro", "resistente", "fragil", "bonito",
]
NOUNS = [
    "produto", "aparelho", "celular", "fone", "livro", "jogo", "tablet",
    "relogio", "teclado", "mouse", "monitor", "cabo", "capa", "carregador",
]
VERBS_GOOD = ["recomendo", "adorei", "gostei", "amei", "aprovei"]
VERBS_BAD = ["devolvi", "reclamei", "detestei"]
TAILS = [
    "chegou dentro do prazo",
    "chegou antes do prazo",
    "entrega demorou muito",
    "veio conforme o anunciado",
    "veio com defeito",
    "funciona muito bem",
    "parou de funcionar",
    "superou minhas expectativas",
    "nao valeu o preco",
    "qualidade surpreendente",
]


def make_rows(n, rng):
    rows = []
    for _ in range(n):
        noun = rng.choice(NOUNS)
        adj = rng.choice(ADJECTIVES)
        good = adj in ADJECTIVES[:7] + ["rapido", "barato", "resistente", "bonito"]
        verb = rng.choice(VERBS_GOOD if good else VERBS_BAD)
        tail = rng.choice(TAILS)
        text = f"o {noun} e {adj} , {tail} , {verb} !"
        title_kind = rng.randrange(4)
        if title_kind == 0:
            title = f"{noun} {adj}"
        elif title_kind == 1:
            title = adj
        elif title_kind == 2:
            title = f"{verb} o {noun}"
        else:
            title = f"{noun} {adj} !"
        rows.append((title, text))
    return rows


def write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["review_title", "review_text"])
        w.writerows(rows)


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240601)
    write_csv(DATA / "sample_reviews.csv", make_rows(200, rng))
    # toy corpus: 32 distinct pairs for the overfit checks
    toy_rng = random.Random(7)
    seen = set()
    rows = []
    while len(rows) < 32:
        (title, text), = make_rows(1, toy_rng)
        if text not in seen and title:
            seen.add(text)
            rows.append((title, text))
    write_csv(DATA / "toy_pairs.csv", rows)
    print("wrote", DATA / "sample_reviews.csv", "and", DATA / "toy_pairs.csv")


if __name__ == "__main__":
    main()
