"""Pluggable behaviours, referenced as ``module:attribute`` import strings."""

DECISION_RULES = {
    "discriminator": "entropy_osr.meta.decision:discriminator_score",
    "entropy": "entropy_osr.meta.decision:entropy_score",
}

CONFIG_READERS = {
    "keyvalue": "entropy_osr.config.readers:KeyValueReader",
    "yaml": "entropy_osr.config.readers:YamlConfigReader",
}

CONFIG_READERS_BY_EXTENSION = {
    "cfg": "keyvalue",
    "conf": "keyvalue",
    "txt": "keyvalue",
    "yaml": "yaml",
    "yml": "yaml",
}

ABLATION_VARIANTS = {
    "full": {},
    "no_entropy": {"lambda2": 0.0},
    "no_meta_ce": {"lambda1": 0.0},
}
