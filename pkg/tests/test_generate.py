import pytest

from conftest import scripted_completion
from courseqa.errors import GenerationError, InputError
from courseqa.generate import EMPTY_CONTEXT_SENTINEL, RetrievedContext, assemble_prompt, generate
from courseqa.index import SearchHit


def ctx_of(*pairs: tuple[str, float, str]) -> RetrievedContext:
    hits = [SearchHit(chunk_id=cid, score=score, rank=i + 1) for i, (cid, score, _) in enumerate(pairs)]
    return RetrievedContext(hits=hits, texts=[text for _, _, text in pairs])


class TestAssemblePrompt:
    def test_chunks_in_rank_order_before_question(self):
        prompt = assemble_prompt(
            ctx_of(("c1", 0.9, "first chunk body"), ("c2", 0.5, "second chunk body")),
            "What is a honeypot?",
        )
        first = prompt.index("first chunk body")
        second = prompt.index("second chunk body")
        question = prompt.index("QUESTION:")
        assert first < second < question
        assert "What is a honeypot?" in prompt

    def test_empty_context_sentinel(self):
        prompt = assemble_prompt(RetrievedContext(), "What is DNS?")
        assert EMPTY_CONTEXT_SENTINEL in prompt

    def test_blank_line_separator(self):
        ctx = ctx_of(("c1", 0.9, "aaa"), ("c2", 0.5, "bbb"))
        assert ctx.rendered == "aaa\n\nbbb"

    def test_instruction_block_verbatim(self):
        prompt = assemble_prompt(RetrievedContext(), "q")
        assert "Keep your answer grounded in the facts of the DOCUMENT." in prompt
        assert "Answer concisely and factually without extra commentary:" in prompt

    def test_empty_question_rejected(self):
        with pytest.raises(InputError):
            assemble_prompt(RetrievedContext(), "")

    def test_mismatched_hits_texts(self):
        with pytest.raises(InputError):
            RetrievedContext(hits=[SearchHit("c", 1.0, 1)], texts=[])


class TestGenerate:
    def test_scripted_answer(self):
        cfg = scripted_completion({"INSTRUCTIONS:": "A honeypot is a decoy system."})
        draft = generate(ctx_of(("c1", 0.8, "honeypot text")), "What is a honeypot?", cfg)
        assert draft.text == "A honeypot is a decoy system."
        assert draft.grounded

    def test_empty_completion_is_error(self):
        cfg = scripted_completion({"INSTRUCTIONS:": ""})
        with pytest.raises(GenerationError):
            generate(ctx_of(("c1", 0.8, "t")), "q", cfg)

    def test_provider_outage_is_generation_error(self):
        cfg = scripted_completion({}, echo=False)
        with pytest.raises(GenerationError):
            generate(ctx_of(("c1", 0.8, "t")), "q", cfg)

    def test_grounded_floor(self):
        cfg = scripted_completion({"INSTRUCTIONS:": "answer"})
        low = generate(ctx_of(("c1", 0.05, "t")), "q", cfg)
        assert not low.grounded
        at_floor = generate(ctx_of(("c1", 0.15, "t")), "q", cfg)
        assert at_floor.grounded
        empty = generate(RetrievedContext(), "q", cfg)
        assert not empty.grounded

    def test_prompt_digest_stable(self):
        cfg = scripted_completion({"INSTRUCTIONS:": "answer"})
        ctx = ctx_of(("c1", 0.5, "same text"))
        assert generate(ctx, "q", cfg).prompt_digest == generate(ctx, "q", cfg).prompt_digest
        assert generate(ctx, "q", cfg).prompt_digest != generate(ctx, "other q", cfg).prompt_digest
