"""Workbench for six-operation sheaf calculus on finite sites.

Exact linear algebra over Q and F_p; Alexandrov sites of finite posets
and face posets; sheaves as stalk functors or lattice presheaves;
sheafification, the six operations, injective resolutions and derived
functors, duality, the coarse-subsite rho layer, and a seeded law suite
in which every asserted isomorphism is a constructed canonical map
checked for invertibility.
"""

from .linalg import GF, Field, Matrix, QQ
from .sites import (
    CoveringSystem,
    FiniteSite,
    OpenLattice,
    PosetSpace,
    SiteError,
    SiteMorphism,
    build_alexandrov_site,
    coarse_subsite,
    fiber_product_site,
    materialize_lattice,
    validate_gt_axioms,
)
from .sheaves import (
    HomSpace,
    SectionSpace,
    SheafError,
    SheafMorphism,
    StalkSheaf,
    cokernel_sheaf,
    constant_on,
    constant_sheaf,
    direct_sum,
    hom_sheaf,
    image_sheaf,
    kernel_sheaf,
    random_sheaf,
    tensor_sheaf,
    zero_sheaf,
)
from .presheaves import (
    Presheaf,
    PresheafMorphism,
    check_sheaf,
    from_stalks,
    pairwise_glue_check,
    plus_functor,
    sheafify,
    to_stalks,
)
from .operations import (
    DirectImage,
    ProperDirectImage,
    adjunction_unit_counit,
    direct_image,
    gamma_Z,
    inverse_image,
    is_quasi_injective,
    proper_direct_image,
    restrict_Z,
)
from .homological import (
    DualizingComplex,
    InjectiveResolution,
    SheafComplex,
    cech_cohomology,
    derived_hom_dims,
    derived_sections,
    injective_resolution,
    is_lct,
    rhom,
    upper_shriek,
    verdier_adjunction_check,
)
from .rho import (
    rho_direct,
    rho_inverse,
    rho_shriek,
    rho_shriek_adjunction_check,
)
from .simplicial import (
    FacePoset,
    SimplicialComplex,
    SimplicialError,
    Stratification,
    constructible_from_stratification,
    face_poset,
    parse_complex,
    serialize_complex,
)
from .models import shipped_models, shipped_morphisms, coarse_variants
from .io import (
    FormatError,
    emit_report,
    parse_field,
    parse_sheaf,
    parse_site,
    serialize_sheaf,
    serialize_site,
)
from .laws import LawReport, law_names, run_law_suite

__version__ = "0.1.0"
