"""
tmn - question decomposition engine

Answers complex questions by decomposing them into sub-questions routed to
pluggable sub-models (a span-extraction QA service and a symbolic calculator).
"""

__version__ = "0.1.0"
