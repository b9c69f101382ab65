/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "mfppo/mfppo.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static void test_env(void) {
  mfppo_env* env = NULL;
  EXPECT(mfppo_env_open("tab-3-n4", &env) == MFPPO_OK);
  mfppo_env_info info;
  EXPECT(mfppo_env_info_get(env, &info) == MFPPO_OK);
  EXPECT(info.num_states == 3 && info.num_agents == 4 && info.num_actions == 2);
  EXPECT(fabs(info.gamma - 0.9) < 1e-15);

  int32_t a[4], b[4], next_a[4], next_b[4];
  EXPECT(mfppo_env_reset(env, 7, a, 4) == MFPPO_OK);
  EXPECT(mfppo_env_reset(env, 7, b, 4) == MFPPO_OK);
  EXPECT(memcmp(a, b, sizeof a) == 0);
  double ra = 0.0, rb = 0.0;
  EXPECT(mfppo_env_step(env, a, 4, 1, 3, next_a, &ra) == MFPPO_OK);
  EXPECT(mfppo_env_step(env, a, 4, 1, 3, next_b, &rb) == MFPPO_OK);
  EXPECT(memcmp(next_a, next_b, sizeof next_a) == 0 && ra == rb);
  EXPECT(ra <= 0.0 && ra >= -1.0);

  EXPECT(mfppo_env_step(env, a, 4, 9, 3, next_a, &ra) == MFPPO_INVALID_ARGUMENT ||
         mfppo_env_step(env, a, 4, 9, 3, next_a, &ra) == MFPPO_OUT_OF_RANGE);
  EXPECT(strlen(mfppo_last_error()) > 0);
  EXPECT(mfppo_env_reset(env, 7, a, 3) == MFPPO_INVALID_ARGUMENT);
  EXPECT(mfppo_env_step(env, NULL, 4, 0, 3, next_a, &ra) == MFPPO_INVALID_ARGUMENT);
  mfppo_env_free(env);

  mfppo_env* missing = NULL;
  EXPECT(mfppo_env_open("no-such-env", &missing) == MFPPO_INVALID_ARGUMENT);
  EXPECT(missing == NULL);
  EXPECT(strstr(mfppo_last_error(), "no-such-env") != NULL);
  EXPECT(mfppo_env_open(NULL, &missing) == MFPPO_INVALID_ARGUMENT);
}

static void test_count(void) {
  mfppo_text* t = NULL;
  EXPECT(mfppo_count(4, 3, 2, &t) == MFPPO_OK);
  EXPECT(strcmp(mfppo_text_data(t), "90") == 0);
  mfppo_text_free(t);
  EXPECT(mfppo_count(200, 40, 6, &t) == MFPPO_OK);
  EXPECT(strlen(mfppo_text_data(t)) > 20);
  mfppo_text_free(t);
  t = NULL;
  EXPECT(mfppo_count(0, 3, 2, &t) == MFPPO_INVALID_ARGUMENT);
  EXPECT(mfppo_count_table(2, 2, 2, &t) == MFPPO_OK);
  EXPECT(strstr(mfppo_text_data(t), "2,2,2,3,12,16") != NULL);
  mfppo_text_free(t);
  EXPECT(strcmp(mfppo_text_data(NULL), "") == 0);
}

static void test_train_eval_params(const char* dir) {
  char cfg[512], out[512], actor[512], copy[512];
  snprintf(cfg, sizeof cfg, "%s/capi_run.ini", dir);
  snprintf(out, sizeof out, "%s/capi_run", dir);
  snprintf(actor, sizeof actor, "%s/capi_run/actor.bin", dir);
  snprintf(copy, sizeof copy, "%s/capi_run/actor_copy.bin", dir);
  FILE* f = fopen(cfg, "w");
  EXPECT(f != NULL);
  if (!f) return;
  fputs("[run]\nenv = tab-3-n4\nseed = 3\neval_episodes = 2\n[schedule]\nK = 2\nT = 40\n"
        "m_actor = 8\nm_critic = 8\n",
        f);
  fclose(f);

  mfppo_train_options opt = {0, 0, out, -1};
  mfppo_text* summary = NULL;
  EXPECT(mfppo_train(cfg, &opt, &summary) == MFPPO_OK);
  EXPECT(strstr(mfppo_text_data(summary), "K=2") != NULL);
  mfppo_text_free(summary);

  mfppo_text* csv = NULL;
  EXPECT(mfppo_eval(actor, "tab-3-n4", 4, 1, &csv) == MFPPO_OK);
  EXPECT(strncmp(mfppo_text_data(csv), "policy,episodes,mean", 20) == 0);
  mfppo_text_free(csv);
  csv = NULL;
  EXPECT(mfppo_eval(actor, "nav-3x3-n2", 4, 1, &csv) == MFPPO_INVALID_ARGUMENT);
  EXPECT(mfppo_eval(actor, "tab-3-n4", 0, 1, &csv) == MFPPO_INVALID_ARGUMENT);

  mfppo_params* p = NULL;
  EXPECT(mfppo_params_load(actor, &p) == MFPPO_OK);
  EXPECT(mfppo_params_save(p, copy) == MFPPO_OK);
  mfppo_params* q = NULL;
  EXPECT(mfppo_params_load(copy, &q) == MFPPO_OK);
  mfppo_env* env = NULL;
  EXPECT(mfppo_env_open("tab-3-n4", &env) == MFPPO_OK);
  const int32_t pop[4] = {0, 1, 2, 2};
  const int32_t perm[4] = {2, 0, 2, 1};
  double fp = 0.0, fq = 0.0, fr = 0.0;
  EXPECT(mfppo_params_forward(p, env, 2, pop, 4, 1, &fp) == MFPPO_OK);
  EXPECT(mfppo_params_forward(q, env, 2, pop, 4, 1, &fq) == MFPPO_OK);
  EXPECT(mfppo_params_forward(p, env, 2, perm, 4, 1, &fr) == MFPPO_OK);
  EXPECT(fp == fq);
  EXPECT(fabs(fp - fr) <= 1e-12);
  EXPECT(mfppo_params_forward(p, env, 2, pop, 3, 1, &fp) == MFPPO_INVALID_ARGUMENT);
  mfppo_env_free(env);
  mfppo_params_free(p);
  mfppo_params_free(q);

  EXPECT(mfppo_params_load("/nonexistent/actor.bin", &p) == MFPPO_IO);
  EXPECT(mfppo_train("/nonexistent/run.ini", NULL, NULL) == MFPPO_IO);
}

static void test_check(void) {
  int pass = 0;
  mfppo_text* report = NULL;
  EXPECT(mfppo_check("counting", 0, NULL, &pass, &report) == MFPPO_OK);
  EXPECT(pass == 1);
  EXPECT(strncmp(mfppo_text_data(report), "PASS counting", 13) == 0);
  mfppo_text_free(report);
  EXPECT(mfppo_check("bogus", 0, NULL, &pass, NULL) == MFPPO_INVALID_ARGUMENT);
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  EXPECT(strlen(mfppo_version()) > 0);
  test_env();
  test_count();
  test_train_eval_params(dir);
  test_check();
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("c api: all checks passed\n");
  return failures ? 1 : 0;
}
