import logging
import os

from dotenv import load_dotenv
from openai import OpenAI

from .errors import TaggerError
from .tagger_client import BaseTagger, parse_tagged_lines

load_dotenv()

logger = logging.getLogger(__name__)

TAGGING_PROMPT = """You are a named-entity tagger for resumes.
Below are the tokens of one resume, one per line, as `index<TAB>token`.
Mark every skill, organization, job title, degree or tool.

Reply with one entity per line and nothing else, in exactly this format:
surface<TAB>LABEL<TAB>start<TAB>end

- surface is the entity's tokens joined by single spaces, copied verbatim
- LABEL is one of SKILL, ORG, TITLE, DEGREE, TOOL
- start is the index of the first token and end is one past the last token

Tokens:
{tokens}
"""


class OpenAITagger(BaseTagger):
    """Tagger backed by a chat model speaking the same line protocol as external taggers."""

    def __init__(self, model=None, client=None):
        self.client = client or OpenAI(api_key=os.getenv("OPENAI_API_KEY"))
        self.model = model or os.getenv("OPENAI_DEFAULT_MODEL", "gpt-4o")

    def chat(self, prompt, **kwargs):
        resp = self.client.chat.completions.create(
            model=self.model,
            messages=[{"role": "user", "content": prompt}],
            **kwargs
        )
        return resp.choices[0].message.content

    def tag(self, doc):
        if not doc.tokens:
            return []
        tokens = '\n'.join(f"{i}\t{surface}" for i, surface in enumerate(doc.surfaces))
        try:
            response = self.chat(TAGGING_PROMPT.format(tokens=tokens), temperature=0)
        except Exception as e:
            raise TaggerError(f"{self.model} failed to tag resume '{doc.id}': {e}") from e
        return parse_tagged_lines((response or '').splitlines(), doc, origin=self.model)
