"""Event ingestion, code mapping, and aggregation to phenotype matrices."""

from .aggregate import FROM_DATA, PhenotypeAggregator, aggregate, compile_predicate, filter_cohort, prevalence
from .io import (
    EventSchema,
    events_from_matrix,
    export_dense_csv,
    load_code_map,
    load_demographics,
    parse_events,
    read_matrix,
    write_matrix,
)
from .mapping import UnmappedReport, map_codes, truncate_events, truncate_to_parent
from .types import (
    align_vocabularies,
    CodeMap,
    CodeSystem,
    Demographics,
    Event,
    EventTable,
    PatientInfo,
    PhenotypeMatrix,
    Vocabulary,
)

__all__ = [
    "FROM_DATA",
    "CodeMap",
    "CodeSystem",
    "Demographics",
    "Event",
    "EventSchema",
    "EventTable",
    "PatientInfo",
    "PhenotypeAggregator",
    "PhenotypeMatrix",
    "UnmappedReport",
    "Vocabulary",
    "aggregate",
    "align_vocabularies",
    "compile_predicate",
    "events_from_matrix",
    "export_dense_csv",
    "filter_cohort",
    "load_code_map",
    "load_demographics",
    "map_codes",
    "parse_events",
    "prevalence",
    "read_matrix",
    "truncate_events",
    "truncate_to_parent",
    "write_matrix",
]
