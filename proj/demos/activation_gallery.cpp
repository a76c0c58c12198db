// Samples every DiTAC variant at a shared random theta and writes a CSV to
// stdout, one column per variant plus the GELU reference. The last column
// demonstrates the quantized path: DITAC through a 64-entry lookup table.
//
//   ./activation_gallery > gallery.csv

#include <cstdio>

#include "ditac/activation.hpp"
#include "ditac/rng.hpp"

int main() {
    using namespace ditac;

    const CpaBasis zb = build_basis(build_tessellation(-3.0, 3.0, 10), true);
    const CpaBasis free_b = build_basis(build_tessellation(-3.0, 3.0, 10), false);
    const CpaBasis pos = build_basis(build_tessellation(0.0, 3.0, 10), true);

    Rng rng(7);
    Eigen::VectorXd theta(zb.d);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal(0.0, 0.8);

    ActivationConfig ditac = make_activation_config(Variant::DITAC, zb);
    ActivationConfig l_ditac = make_activation_config(Variant::L_DITAC, pos);
    ActivationConfig ge_ditac = make_activation_config(Variant::GE_DITAC, pos);
    ActivationConfig inf_ditac = make_activation_config(Variant::INF_DITAC, free_b);
    ditac.theta = theta;
    l_ditac.theta = theta.head(l_ditac.basis.d);
    ge_ditac.theta = theta.head(ge_ditac.basis.d);
    for (Eigen::Index i = 0; i < inf_ditac.theta.size(); ++i)
        inf_ditac.theta[i] = rng.normal(0.0, 0.8);  // free boundary, d = 11

    ActivationConfig quant = ditac;
    quant.n_quant = 64;
    const LookupTable lut = build_lut(quant, 1);

    std::printf("x,gelu,ditac,l_ditac,ge_ditac,inf_ditac,ditac_lut64\n");
    for (int k = 0; k < 401; ++k) {
        const double x = -5.0 + 10.0 * k / 400.0;
        Eigen::VectorXd xv(1);
        xv[0] = x;
        std::printf("%.6f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n", x, gelu(x),
                    activate_exact(ditac, x), activate_exact(l_ditac, x),
                    activate_exact(ge_ditac, x), activate_exact(inf_ditac, x),
                    lut_forward(lut, quant, xv, 1)[0]);
    }
    return 0;
}
