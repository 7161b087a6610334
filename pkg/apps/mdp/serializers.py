"""
Serializers for the mdp app.

Validates MDP JSON documents (keys ``n_states``, ``n_actions``,
``n_objectives``, ``gamma``, ``rho``, ``transitions``, ``rewards``) and
renders a TabularMdp back to the same layout.
"""
from rest_framework import serializers

from .domain import TabularMdp
from .services import MdpService


def _nested_floats(depth):
    field = serializers.FloatField()
    for _ in range(depth - 1):
        field = serializers.ListField(child=field)
    return serializers.ListField(child=field)


class MdpSerializer(serializers.Serializer):
    """Serializer for the MDP file format."""

    n_states = serializers.IntegerField(min_value=1)
    n_actions = serializers.IntegerField(min_value=1)
    n_objectives = serializers.IntegerField(min_value=1)
    gamma = serializers.FloatField(source='discount')
    rho = _nested_floats(1)
    transitions = _nested_floats(3)
    rewards = _nested_floats(3)

    def validate_gamma(self, value):
        """Validate the discount factor."""
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError('gamma must lie in (0,1).')
        return value

    def validate(self, attrs):
        """Check declared sizes, then every TabularMdp invariant."""
        n_states = attrs['n_states']
        n_actions = attrs['n_actions']
        n_objectives = attrs['n_objectives']

        if len(attrs['rho']) != n_states:
            raise serializers.ValidationError(
                {'rho': f'expected {n_states} entries.'}
            )
        transitions = attrs['transitions']
        if (len(transitions) != n_states
                or any(len(row) != n_actions for row in transitions)
                or any(len(dist) != n_states
                       for row in transitions for dist in row)):
            raise serializers.ValidationError(
                {'transitions': f'expected shape [{n_states}][{n_actions}]'
                                f'[{n_states}].'}
            )
        rewards = attrs['rewards']
        if (len(rewards) != n_objectives
                or any(len(plane) != n_states for plane in rewards)
                or any(len(row) != n_actions
                       for plane in rewards for row in plane)):
            raise serializers.ValidationError(
                {'rewards': f'expected shape [{n_objectives}][{n_states}]'
                            f'[{n_actions}].'}
            )

        mdp = TabularMdp(
            transitions=transitions,
            rewards=rewards,
            discount=attrs['discount'],
            initial_dist=attrs['rho'],
        )
        result = MdpService.validate(mdp)
        if not result.ok:
            raise serializers.ValidationError(
                {'mdp': list(result.violations)}
            )
        attrs['mdp'] = mdp
        return attrs

    def create(self, validated_data):
        """Return the validated TabularMdp."""
        return validated_data['mdp']

    def to_representation(self, instance):
        """Render a TabularMdp in file layout."""
        return instance.as_dict()
