#pragma once

#include "corpus.hpp"
#include "crf.hpp"
#include "embedding.hpp"
#include "errors.hpp"
#include "lstm.hpp"
#include "nncore.hpp"
#include "radicals.hpp"
#include "segmenter.hpp"
#include "utf8.hpp"
