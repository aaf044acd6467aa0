import pytest

from hashtaggen import corpus

WORKED_TITLE = "Adorei o produto!"
WORKED_TEXT = "Fica super lindo ele aplicado, veio conforme o anunciado!"


@pytest.fixture
def worked_record():
    return corpus.ReviewRecord(id="worked", title_raw=WORKED_TITLE, text_raw=WORKED_TEXT)


@pytest.fixture
def sample_vocab(worked_record):
    texts = [
        corpus.clean_text(worked_record.title_raw),
        corpus.clean_text(worked_record.text_raw),
        "produto muito bom",
        "excelente qualidade , chegou dentro do prazo , recomendo",
    ]
    return corpus.build_vocab(texts, cap=100)


@pytest.fixture(scope="session")
def toy_corpus():
    from hashtaggen.cli import TOY_CSV

    records, _ = corpus.load_reviews(TOY_CSV)
    return records


@pytest.fixture(scope="session")
def toy_vocab(toy_corpus):
    texts = [corpus.clean_text(r.title_raw) for r in toy_corpus] + [
        corpus.clean_text(r.text_raw) for r in toy_corpus
    ]
    return corpus.build_vocab(texts, cap=200)
