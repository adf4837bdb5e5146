#pragma once

#include "homoglab/core/errors.hpp"
#include "homoglab/core/grid.hpp"
#include "homoglab/core/smallmat.hpp"
#include "homoglab/core/fields.hpp"
#include "homoglab/core/multiindex.hpp"

#include "homoglab/random/kernel.hpp"
#include "homoglab/random/white_noise.hpp"
#include "homoglab/random/gaussian_field.hpp"
#include "homoglab/random/coefficient.hpp"

#include "homoglab/calculus/stencils.hpp"
#include "homoglab/calculus/fft.hpp"
#include "homoglab/calculus/poisson.hpp"
#include "homoglab/calculus/divform.hpp"

#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/correctors/abar.hpp"

#include "homoglab/twoscale/testfn.hpp"
#include "homoglab/twoscale/cascade.hpp"
#include "homoglab/twoscale/expansion.hpp"
#include "homoglab/twoscale/heterogeneous.hpp"
#include "homoglab/twoscale/rates.hpp"

#include "homoglab/commutators/commutator.hpp"
#include "homoglab/commutators/standard.hpp"
#include "homoglab/commutators/identities.hpp"

#include "homoglab/stats/moments.hpp"
#include "homoglab/stats/scaling.hpp"
#include "homoglab/stats/normality.hpp"
#include "homoglab/stats/qestimate.hpp"

#include "homoglab/lab/ensemble.hpp"
#include "homoglab/lab/observables.hpp"
#include "homoglab/lab/malliavin.hpp"

#include "homoglab/io/sha256.hpp"
#include "homoglab/io/config.hpp"
#include "homoglab/io/persist.hpp"

#include "homoglab/suites/common.hpp"
#include "homoglab/suites/identities.hpp"
#include "homoglab/suites/refinement.hpp"
#include "homoglab/suites/scaling.hpp"
#include "homoglab/suites/fluctuations.hpp"
#include "homoglab/suites/normality.hpp"
#include "homoglab/suites/sensitivity.hpp"
