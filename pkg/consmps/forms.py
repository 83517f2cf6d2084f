# consmps/forms.py
from wtforms import Form, FloatField, IntegerField, StringField
from wtforms.validators import AnyOf, NumberRange, StopValidation, ValidationError

from .problems import INSTANCE_TYPES


class Required:
    """Forms here are fed with `data=`, so presence is judged on the value, not the raw input."""

    def __call__(self, form, field):
        if field.data is None:
            raise StopValidation("This field is required.")


class OptionalNumber:
    """Skip the field when no value was given, otherwise enforce a lower bound."""

    def __init__(self, min=None, strict=False, message=None):
        self.min = min
        self.strict = strict
        self.message = message

    def __call__(self, form, field):
        if field.data is None:
            return
        if self.min is None:
            return
        if field.data < self.min or (self.strict and field.data == self.min):
            relation = '>' if self.strict else '>='
            raise ValidationError(self.message or f"must be {relation} {self.min}")


class Positive:
    def __call__(self, form, field):
        if field.data is not None and field.data <= 0:
            raise ValidationError("must be > 0")


class SolverSettingsForm(Form):
    """Validates the solver flags of `solve` and `bench`."""
    iterations = IntegerField('Iterations', validators=[Required(), NumberRange(min=1)])
    cutoff = FloatField('Cutoff', validators=[Required(), NumberRange(min=0.0)])
    learning_rate = FloatField('Learning rate', validators=[Required(), Positive()])
    samples = IntegerField('Samples', validators=[Required(), NumberRange(min=1)])
    replace = IntegerField('Replace', validators=[Required(), NumberRange(min=1)])
    t_init = FloatField('Initial temperature', validators=[OptionalNumber(min=0.0, strict=True)])
    max_dim = IntegerField('Max bond dimension', validators=[OptionalNumber(min=1)])
    time_limit = FloatField('Time limit', validators=[OptionalNumber(min=0.0, strict=True)])

    def validate_replace(self, field):
        if field.data is not None and self.samples.data is not None and field.data > self.samples.data:
            raise ValidationError(f"cannot exceed samples ({self.samples.data})")


class InstanceHeaderForm(Form):
    """Top-level scalar fields of an instance file."""
    type = StringField('Type', validators=[Required(), AnyOf(INSTANCE_TYPES)])
    N = IntegerField('N', validators=[Required(), NumberRange(min=1)])
    M = IntegerField('M', validators=[Required(), NumberRange(min=1)])
    W = IntegerField('W', validators=[OptionalNumber(min=0)])
    seed = IntegerField('Seed', validators=[OptionalNumber(min=0)])


def form_errors(form):
    return "; ".join(f"{name}: {msg}" for name, messages in form.errors.items() for msg in messages)


def validate_or_raise(form, error_cls):
    """Run the form validators and raise ``error_cls`` listing every field error."""
    if not form.validate():
        raise error_cls(form_errors(form))
    return form
