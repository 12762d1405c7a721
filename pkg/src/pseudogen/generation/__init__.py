from .baselines import KINDS as BASELINE_KINDS, baseline_generate
from .llm import LlmConfig, generate_batches, llm_generate
from .mock import GenerationError, mock_generate
from .parse import CandidateSet, EmptyParse, parse_candidates
from .prompt import PromptBundle, PromptTooLong, build_prompt

STRATEGIES = ("llm", "mock") + BASELINE_KINDS
