"""Zero-resource speech translation and recognition on synthetic toy languages.

A frozen self-supervised speech encoder soft-prompts a frozen multilingual
text LM through a trainable convolutional adapter.  Everything runs at desk
scale on deterministic pseudo-acoustic features, so cross-lingual transfer
between seen and unseen languages can be studied end to end.
"""

__version__ = "0.1.0"
