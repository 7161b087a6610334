"""Serializers for scalarization config blocks."""
from django.conf import settings
from rest_framework import serializers

from .domain import AlphaFair, KinkedQuadratic, WeightedSum

FAMILY_CHOICES = ['alpha_fair', 'weighted_sum', 'kinked_quadratic']


class ScalarizationSerializer(serializers.Serializer):
    """
    Serializer for ``{"family", "alpha", "delta", "weights", "kinks",
    "kappa"}`` blocks.

    Expects ``gamma`` and ``n_objectives`` in the serializer context.
    """

    family = serializers.ChoiceField(choices=FAMILY_CHOICES)
    alpha = serializers.FloatField(required=False)
    delta = serializers.FloatField(required=False, allow_null=True)
    clamp = serializers.BooleanField(required=False, default=True)
    weights = serializers.ListField(
        child=serializers.FloatField(min_value=0.0), required=False
    )
    kinks = serializers.ListField(
        child=serializers.FloatField(), required=False
    )
    kappa = serializers.FloatField(required=False, default=1.0)

    def validate_alpha(self, value):
        """Validate the fairness exponent."""
        if value <= 0 or value == 1:
            raise serializers.ValidationError(
                'alpha must be positive and different from 1.'
            )
        return value

    def validate_delta(self, value):
        """Validate the domain floor."""
        if value is not None and value <= 0:
            raise serializers.ValidationError('delta must be positive.')
        return value

    def validate_kappa(self, value):
        """Validate the kink curvature."""
        if value <= 0:
            raise serializers.ValidationError('kappa must be positive.')
        return value

    def validate(self, attrs):
        """Check the fields each family needs."""
        n_objectives = self.context['n_objectives']
        family = attrs['family']

        if family == 'alpha_fair':
            if 'alpha' not in attrs:
                raise serializers.ValidationError(
                    {'alpha': 'required for alpha_fair.'}
                )
            if attrs.get('delta') is None:
                scale = settings.MORL_NPG['ALPHA_FAIR_FLOOR_SCALE']
                attrs['delta'] = scale / (1.0 - self.context['gamma'])
        elif family == 'weighted_sum':
            if len(attrs.get('weights', [])) != n_objectives:
                raise serializers.ValidationError(
                    {'weights': f'expected {n_objectives} weights.'}
                )
        elif len(attrs.get('kinks', [])) != n_objectives:
            raise serializers.ValidationError(
                {'kinks': f'expected {n_objectives} kinks.'}
            )
        return attrs

    def create(self, validated_data):
        """Instantiate the configured family."""
        family = validated_data['family']
        if family == 'alpha_fair':
            return AlphaFair(
                alpha=validated_data['alpha'],
                delta=validated_data['delta'],
                n_objectives=self.context['n_objectives'],
                clamp=validated_data['clamp'],
            )
        if family == 'weighted_sum':
            return WeightedSum(weights=validated_data['weights'])
        return KinkedQuadratic(
            kinks=validated_data['kinks'],
            kappa=validated_data['kappa'],
        )

    def to_representation(self, instance):
        return instance.as_dict()
