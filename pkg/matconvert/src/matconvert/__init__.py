"""Standalone converter from MAT-file subject data to canonical TSV files."""

from .converter import ConversionError, SubjectSummary, convert_subject

__version__ = "0.1.0"
