"""Stage I-III task generation, JSON schemas and curriculum sampling."""

from .base import TaskInstance, instance_seed
from .corpus import GenerationSettings, generate_corpus, generate_for_structure
from .curriculum import DEFAULT_PHASES, CurriculumPhase, ReplayBuffer, run_curriculum, sample_curriculum
from .schemas import ALL_TASKS, STAGE1_TASKS, STAGE2_TASKS, STAGE3_TASKS, target_schema, validation_errors
from .stage1 import gen_stage1
from .stage2 import gen_stage2
from .stage3 import gen_stage3

__all__ = [
    "ALL_TASKS", "DEFAULT_PHASES", "STAGE1_TASKS", "STAGE2_TASKS", "STAGE3_TASKS", "CurriculumPhase",
    "GenerationSettings", "ReplayBuffer", "TaskInstance", "gen_stage1", "gen_stage2", "gen_stage3",
    "generate_corpus", "generate_for_structure", "instance_seed", "run_curriculum", "sample_curriculum",
    "target_schema", "validation_errors",
]
