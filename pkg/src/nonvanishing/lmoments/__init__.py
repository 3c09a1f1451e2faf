from .afe import (
    central_value,
    central_value_squared,
    central_values,
    central_values_squared,
    first_afe_terms,
    second_afe_terms,
)
from .mollifier import (
    MollifierParams,
    balanced_params,
    mollifier0_value,
    mollifier_coeffs,
    mollifier_value,
    piece_coeffs,
)
from .moments import (
    FamilyValues,
    MomentReport,
    SecondMoment,
    family_values,
    first_moment,
    first_moment_orthogonality,
    moment_report,
    second_moment,
)
from .bilinear import (
    BilinearSpec,
    PoissonDual,
    bilinear_form,
    bilinear_poisson_dual,
    bump,
    envelopes,
    random_spec,
)
