"""Structured-extraction cache for agentic reasoning over long text."""

from .agent import AgentConfig, parse_action, run
from .baselines import BaselineConfig, run_cot, run_generic, run_react
from .cache import Cache, init_cache, render_cache, self_check, update_cache
from .datasets import GoldTable, TaskInstance, adapt, load_dataset
from .evaluation import exact_match, normalize_answer, rouge_l, rouge_n
from .extraction import RecordRow, RecordSet, extract, extract_monolithic, normalize_row, parse_records
from .gateway import ChatRequest, ChatResponse, Gateway, ModelProfile, ScriptedBackend, load_fixture
from .runner import RunConfig, run_experiment
from .schema import ExtractionSchema, SchemaSlot, induce_schema, load_gold_schema, parse_schema
from .trace import Final, Read, RunTrace, Seek, replay, validate_trace

__version__ = "0.1.0"
