// End-to-end harness usage in one screen: train DiTAC and a GELU baseline
// on the 1-D toy regression with a shortened budget and print both learning
// curves side by side.
//
//   ./train_toy [iterations]

#include <cstdio>
#include <cstdlib>

#include "ditac/train.hpp"

int main(int argc, char** argv) {
    using namespace ditac;

    ExperimentConfig cfg = make_experiment_config("reg1d_a");
    cfg.iterations = argc > 1 ? std::strtol(argv[1], nullptr, 10) : 8000;
    cfg.eval_every = cfg.iterations / 8;

    ExperimentConfig base = cfg;
    base.activation = "gelu";

    std::printf("task %s: y = sin(exp(6x)) on [%g, %g], net 1-30-1, %ld iterations\n\n",
                cfg.task.c_str(), cfg.domain_lo, cfg.domain_hi, cfg.iterations);
    const RunReport ditac = run_experiment(cfg);
    const RunReport gelu = run_experiment(base);

    std::printf("%10s %14s %14s\n", "step", "ditac test R2", "gelu test R2");
    for (std::size_t i = 0; i < ditac.history.size(); ++i)
        std::printf("%10.0f %14.4f %14.4f\n", ditac.history[i][0], ditac.history[i][2],
                    gelu.history[i][2]);
    std::printf("\nfinal: ditac R2 = %.4f (mse %.5f), gelu R2 = %.4f (mse %.5f)\n",
                ditac.final_metric, ditac.final_test_mse, gelu.final_metric,
                gelu.final_test_mse);
    std::printf("parameters: %ld vs %ld (+%ld trainable activation parameters)\n",
                ditac.n_params, gelu.n_params, ditac.n_act_params);
    return 0;
}
