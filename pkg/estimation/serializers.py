import math

from rest_framework import serializers


class FiniteFloatField(serializers.FloatField):
    """Float that renders non-finite values as null so reports stay strict JSON."""

    def to_representation(self, value):
        value = float(value)
        return value if math.isfinite(value) else None


class RNGSerializer(serializers.Serializer):
    algorithm = serializers.CharField()
    numpy_version = serializers.CharField()
    seed = serializers.IntegerField(min_value=0)


class MarginalFitSerializer(serializers.Serializer):
    family = serializers.CharField(source="model.family.value")
    params = serializers.DictField(child=serializers.FloatField(), source="model.param_dict")
    log_likelihood = serializers.FloatField()
    aic = serializers.FloatField()
    n = serializers.IntegerField()
    iterations = serializers.IntegerField()
    gradient_norm = serializers.FloatField()
    aic_table = serializers.DictField(child=serializers.FloatField(allow_null=True))
    excluded = serializers.ListField(child=serializers.CharField(), required=False)


class MarginPairSerializer(serializers.Serializer):
    x = MarginalFitSerializer(source="marginal_x")
    y = MarginalFitSerializer(source="marginal_y")


class KSSerializer(serializers.Serializer):
    statistic = serializers.FloatField()
    p_value = serializers.FloatField(min_value=0.0, max_value=1.0)
    B = serializers.IntegerField(source="n_bootstrap", min_value=1)
    seed = serializers.IntegerField(min_value=0)
    stream = serializers.IntegerField(min_value=0)
    dropped = serializers.IntegerField(min_value=0)


class KSPairSerializer(serializers.Serializer):
    x = KSSerializer(source="ks_x")
    y = KSSerializer(source="ks_y")


class ConditionalCurveSerializer(serializers.Serializer):
    x = serializers.FloatField()
    y = serializers.ListField(child=serializers.FloatField())
    cdf = serializers.ListField(child=serializers.FloatField(min_value=0.0, max_value=1.0))


class FitReportSerializer(serializers.Serializer):
    columns = serializers.DictField(child=serializers.CharField())
    n = serializers.IntegerField(min_value=3)
    dropped_rows = serializers.IntegerField(min_value=0)
    marginals = MarginPairSerializer(source="*")
    rho_emp = serializers.FloatField(min_value=-1.0, max_value=1.0)
    tau_emp = serializers.FloatField(min_value=-1.0, max_value=1.0)
    method = serializers.CharField()
    theta_hat = serializers.FloatField(source="theta_hat.theta", min_value=0.0)
    ks = KSPairSerializer(source="*")
    conditional_curves = ConditionalCurveSerializer(many=True, required=False)
    config = serializers.DictField(required=False)
    rng = RNGSerializer()


class AuditReportSerializer(serializers.Serializer):
    check_name = serializers.CharField()
    theta = serializers.JSONField()
    grid_spec = serializers.CharField()
    worst_violation = FiniteFloatField(allow_null=True)
    tolerance = serializers.FloatField(min_value=0.0)
    details = serializers.DictField(required=False)

    def get_fields(self):
        fields = super().get_fields()
        # "pass" is a keyword, so the field cannot be declared in the class body
        fields["pass"] = serializers.BooleanField(source="passed")
        return fields

    def to_representation(self, instance):
        data = super().to_representation(instance)
        if isinstance(data["theta"], tuple):
            data["theta"] = list(data["theta"])
        return data


class AuditRunSerializer(serializers.Serializer):
    passed = serializers.BooleanField()
    reports = AuditReportSerializer(many=True)
    config = serializers.DictField(required=False)
    rng = RNGSerializer()


class MeasuresSerializer(serializers.Serializer):
    theta = serializers.FloatField(min_value=0.0)
    rho = serializers.FloatField(min_value=-1.0, max_value=0.0)
    tau = serializers.FloatField(min_value=-1.0, max_value=0.0)
    config = serializers.DictField(required=False)
