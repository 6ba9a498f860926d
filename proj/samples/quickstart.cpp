// Runs the solver on the one-dimensional example with a kink at x = 0 and
// prints the iterates.
#include <iostream>

#include "gam/gam.hpp"

int main()
{
    const gam::BilevelProblem prob = gam::make_example1();
    gam::GamConfig cfg;
    cfg.max_outer_iters = 100;

    auto [result, trace] = gam::run(prob, gam::Vector::Constant(1, 2.0), cfg);
    for (const auto& r : trace)
        std::cout << r.k << "  x=" << r.x(0) << "  phi=" << r.phi << "  |g|=" << r.g_norm << "  "
                  << gam::branch_name(r.branch) << '\n';
    std::cout << result.status << " after " << result.iterations << " iterations, phi=" << result.phi << '\n';
    return result.converged ? 0 : 1;
}
