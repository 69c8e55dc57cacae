"""ODES: an online dynamic examination service.

Question authoring with a hierarchical category taxonomy, seeded random
exam assembly, student sessions with a fixed question assignment,
weighted auto-grading with optional negative marking, a manual grading
workflow (Open -> Finalized -> Checked), durable result storage and CSV
reporting, all exposed over an HTTP API and an operator CLI.
"""

__version__ = "0.1.0"
