import pytest

from sensemt.corpus import AnnotatedSentence, AnnotatedToken, ParallelPair


def make_sentence(sid, text, annotations):
    """Build a sentence whose annotated tokens are (word, lemma, sense) triples.

    Each word must occur in `text`; spans are located left-to-right.
    """
    tokens = []
    cursor = 0
    for word, lemma, sense in annotations:
        start = text.index(word, cursor)
        end = start + len(word)
        cursor = end
        tokens.append(
            AnnotatedToken(surface=word, lemma=lemma, start=start, end=end, sense=sense)
        )
    return AnnotatedSentence(id=sid, text=text, tokens=tuple(tokens))


def make_pair(sid, text, annotations, target="objetivo", src="en", tgt="es"):
    return ParallelPair(
        source=make_sentence(sid, text, annotations),
        target=target,
        src_lang=src,
        tgt_lang=tgt,
    )


@pytest.fixture
def c0():
    """Four-sentence fixture: bank has senses R (x2) and F, bass has M."""
    return [
        make_pair("s1", "I sat by the bank", [("bank", "bank", "R")],
                  target="Me senté junto a la orilla"),
        make_pair("s2", "the bank approved the loan", [("bank", "bank", "F")],
                  target="el banco aprobó el préstamo"),
        make_pair("s3", "the bank was muddy", [("bank", "bank", "R")],
                  target="la orilla estaba embarrada"),
        make_pair("s4", "he plays bass", [("bass", "bass", "M")],
                  target="él toca el bajo"),
    ]
