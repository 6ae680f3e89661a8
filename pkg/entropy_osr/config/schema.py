import marshmallow as ma
from marshmallow import validate

from ..autodiff import DTYPES
from ..ext_config import DECISION_RULES
from ..losses import CLASS_PROB_MODES
from ..network import DISCRIMINATOR_INPUTS


class CommaList(ma.fields.List):
    """List field also accepting a comma separated string (``16,32,64``)."""

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        return super()._deserialize(value, attr, data, **kwargs)


NON_NEGATIVE = validate.Range(min=0)
POSITIVE = validate.Range(min=1)


class RunConfigSchema(ma.Schema):
    """Every key the pipeline understands; unknown keys are rejected."""

    class Meta:
        unknown = ma.RAISE

    # synthetic data
    n_classes = ma.fields.Integer(validate=validate.Range(min=2))
    per_class = ma.fields.Integer(validate=POSITIVE)
    test_per_class = ma.fields.Integer(validate=POSITIVE)
    image_size = ma.fields.Integer(validate=validate.Range(min=16))
    speckle_looks = ma.fields.Integer(validate=POSITIVE)
    difficulty = ma.fields.Float(validate=validate.Range(min=0.0, max=1.0))

    # network
    conv_channels = CommaList(ma.fields.Integer(validate=POSITIVE), validate=validate.Length(min=1))
    kernel_size = ma.fields.Integer(validate=POSITIVE)
    discriminator_input = ma.fields.String(validate=validate.OneOf(DISCRIMINATOR_INPUTS))

    # meta-training
    episodes = ma.fields.Integer(validate=NON_NEGATIVE)
    n_closed = ma.fields.Integer(validate=POSITIVE)
    n_support = ma.fields.Integer(validate=POSITIVE)
    n_query = ma.fields.Integer(validate=POSITIVE)
    n_open = ma.fields.Integer(validate=POSITIVE)
    lambda1 = ma.fields.Float(validate=NON_NEGATIVE)
    lambda2 = ma.fields.Float(validate=NON_NEGATIVE)
    lambda3 = ma.fields.Float(validate=NON_NEGATIVE)
    lr0 = ma.fields.Float(validate=validate.Range(min=0.0, min_inclusive=False))
    lr_halving_period = ma.fields.Integer(validate=POSITIVE)
    tau = ma.fields.Float(validate=validate.Range(min=0.0, min_inclusive=False))
    mode = ma.fields.String(validate=validate.OneOf(CLASS_PROB_MODES))
    seed = ma.fields.Integer(validate=validate.Range(min=0, max=2**64 - 1))
    scalar_width = ma.fields.String(validate=validate.OneOf(sorted(DTYPES)))
    open_balanced = ma.fields.Boolean()
    train_per_class = ma.fields.Integer(validate=NON_NEGATIVE)

    # meta-testing
    threshold = ma.fields.Float(allow_nan=False)
    decision_rule = ma.fields.String(validate=validate.OneOf(sorted(DECISION_RULES)))
    sweep_grid = CommaList(ma.fields.Float(allow_nan=False), validate=validate.Length(min=1))
    n_known = ma.fields.Integer(validate=NON_NEGATIVE)
    eval_rounds = ma.fields.Integer(validate=POSITIVE)
    test_support_per_class = ma.fields.Integer(validate=NON_NEGATIVE)
    workers = ma.fields.Integer(validate=POSITIVE)
    batch_size = ma.fields.Integer(validate=POSITIVE)

    # gradient self-test
    gradcheck_eps = ma.fields.Float(validate=validate.Range(min=0.0, min_inclusive=False))
    gradcheck_tol = ma.fields.Float(validate=validate.Range(min=0.0, min_inclusive=False))
    gradcheck_entries = ma.fields.Integer(validate=NON_NEGATIVE)

    # paths and logging
    data_dir = ma.fields.String()
    checkpoint = ma.fields.String()
    report_dir = ma.fields.String()
    log_level = ma.fields.String(
        validate=validate.OneOf(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    )

    @ma.validates_schema
    def validate_sweep_grid(self, data, **kwargs):
        grid = data.get("sweep_grid")
        if grid and any(b < a for a, b in zip(grid, grid[1:])):
            raise ma.ValidationError("Threshold grid must be sorted", "sweep_grid")
