"""Serializers for run config files."""
from rest_framework import serializers

ALGORITHM_CHOICES = ['npg', 'mlmc_npg']
THEOREM_CHOICES = ['theorem1', 'theorem2']


class ExplicitScheduleSerializer(serializers.Serializer):
    """Serializer for a hand-written schedule."""

    outer_iters = serializers.IntegerField(min_value=0)
    inner_iters = serializers.IntegerField(min_value=1)
    horizon = serializers.IntegerField(min_value=1)
    step_alpha = serializers.FloatField()
    step_beta = serializers.FloatField(required=False, allow_null=True)
    B1 = serializers.IntegerField(min_value=1, required=False)
    B2 = serializers.IntegerField(min_value=1, required=False)
    B_max = serializers.IntegerField(min_value=1, required=False)
    B = serializers.IntegerField(min_value=1, required=False)
    coupled_base = serializers.BooleanField(required=False, default=True)
    fisher_normalized = serializers.BooleanField(required=False, default=True)
    theta_init = serializers.ListField(
        child=serializers.FloatField(), required=False, allow_null=True
    )
    omega_init = serializers.ListField(
        child=serializers.FloatField(), required=False, allow_null=True
    )
    warm_start = serializers.BooleanField(required=False, default=False)
    refresh_mu = serializers.BooleanField(required=False, default=False)

    def validate_step_alpha(self, value):
        """Validate the outer step size."""
        if value <= 0:
            raise serializers.ValidationError('step_alpha must be positive.')
        return value

    def validate_step_beta(self, value):
        """Validate the inner step size."""
        if value is not None and value <= 0:
            raise serializers.ValidationError('step_beta must be positive.')
        return value


class TheoremScheduleSerializer(serializers.Serializer):
    """Serializer for a schedule derived from a target accuracy."""

    epsilon = serializers.FloatField()
    which = serializers.ChoiceField(choices=THEOREM_CHOICES)
    k_constant = serializers.FloatField(required=False, allow_null=True)
    alpha_scale = serializers.FloatField(required=False, default=1.0)
    R_0 = serializers.FloatField(required=False, allow_null=True)
    outer_iters = serializers.IntegerField(min_value=0, required=False)
    inner_iters = serializers.IntegerField(min_value=1, required=False)
    theta_init = serializers.ListField(
        child=serializers.FloatField(), required=False, allow_null=True
    )

    def validate_epsilon(self, value):
        """Validate the target accuracy."""
        if not 0 < value < 1:
            raise serializers.ValidationError('epsilon must lie in (0,1).')
        return value

    def validate_k_constant(self, value):
        """Validate the iteration-count constant."""
        if value is not None and value <= 0:
            raise serializers.ValidationError('k_constant must be positive.')
        return value

    def validate_alpha_scale(self, value):
        """Validate the theorem1 step constant."""
        if value <= 0:
            raise serializers.ValidationError('alpha_scale must be positive.')
        return value


class RunConfigSerializer(serializers.Serializer):
    """
    Serializer for run config files.

    ``schedule`` holds exactly one of ``explicit`` or ``theorem``.
    """

    mdp_path = serializers.CharField()
    scalarization = serializers.DictField()
    algorithm = serializers.ChoiceField(choices=ALGORITHM_CHOICES)
    schedule = serializers.DictField()
    seed = serializers.IntegerField(min_value=0, default=0)
    output_path = serializers.CharField(required=False, allow_null=True)

    def validate_schedule(self, value):
        """Validate whichever schedule block is present."""
        if set(value) not in ({'explicit'}, {'theorem'}):
            raise serializers.ValidationError(
                'schedule must hold exactly one of "explicit" or "theorem".'
            )
        kind, block = next(iter(value.items()))
        nested = (
            ExplicitScheduleSerializer(data=block) if kind == 'explicit'
            else TheoremScheduleSerializer(data=block)
        )
        if not nested.is_valid():
            raise serializers.ValidationError({kind: nested.errors})
        return {kind: dict(nested.validated_data)}

    def validate(self, attrs):
        """Check that the schedule matches the algorithm."""
        algorithm = attrs['algorithm']
        schedule = attrs['schedule']
        if 'theorem' in schedule:
            expected = 'theorem1' if algorithm == 'mlmc_npg' else 'theorem2'
            if schedule['theorem']['which'] != expected:
                raise serializers.ValidationError(
                    {'schedule': f'{algorithm} uses the {expected} schedule.'}
                )
            return attrs

        block = schedule['explicit']
        needed = ('B1', 'B2') if algorithm == 'npg' else ('B_max', 'B')
        missing = [name for name in needed if name not in block]
        if missing:
            raise serializers.ValidationError(
                {'schedule': f'{algorithm} needs {", ".join(missing)}.'}
            )
        return attrs
