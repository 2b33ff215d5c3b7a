#pragma once

#include "selfcheck/backends.hpp"
#include "selfcheck/cache.hpp"
#include "selfcheck/commands.hpp"
#include "selfcheck/config.hpp"
#include "selfcheck/consistency.hpp"
#include "selfcheck/core.hpp"
#include "selfcheck/dataset.hpp"
#include "selfcheck/error.hpp"
#include "selfcheck/eval.hpp"
#include "selfcheck/greybox.hpp"
#include "selfcheck/hash.hpp"
#include "selfcheck/http_backend.hpp"
#include "selfcheck/methods.hpp"
#include "selfcheck/ngram.hpp"
#include "selfcheck/parallel.hpp"
#include "selfcheck/qa.hpp"
#include "selfcheck/segment.hpp"
#include "selfcheck/stub_backends.hpp"
#include "selfcheck/synth.hpp"
#include "selfcheck/tokenize.hpp"
