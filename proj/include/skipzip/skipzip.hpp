#pragma once

#include "skipzip/core.hpp"
#include "skipzip/codec.hpp"
#include "skipzip/format.hpp"
#include "skipzip/prompt.hpp"
#include "skipzip/parse.hpp"
#include "skipzip/interp.hpp"
#include "skipzip/llm.hpp"
#include "skipzip/reconstruct.hpp"
#include "skipzip/evaluate.hpp"
#include "skipzip/datagen.hpp"
#include "skipzip/storage.hpp"
