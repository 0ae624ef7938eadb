"""videoground: instance-grounded video training data and diversity evaluation.

The package turns raw video manifests into interleaved grounded-caption
training samples (filter cascade → instance annotation → serialization),
builds prompt-rewrite instruction data, samples rewrites with nucleus/
temperature strategies, and evaluates generation diversity and fidelity —
with every neural model behind a stub-able gateway.
"""

__version__ = "0.1.0"
