import logging
import os
from typing import List

from .errors import decoding
from .preprocess import RawDocument

logger = logging.getLogger(__name__)


class ResumeParser:
    """Reads a corpus folder of plain-text resumes."""

    def __init__(self):
        self.supported_formats = ['.txt']

    def extract_resume_id(self, filename):
        """Resume id is the filename without its extension"""
        return os.path.splitext(os.path.basename(filename))[0]

    def parse_resume(self, file_path):
        """Parse resume and return extracted text"""
        _, ext = os.path.splitext(file_path.lower())
        if ext not in self.supported_formats:
            raise ValueError(f"Unsupported file format: {ext}")

        with decoding(file_path), open(file_path, 'r', encoding='utf-8') as f:
            return f.read()

    def get_all_resumes(self, folder_path) -> List[RawDocument]:
        """Get every .txt resume in a folder, ordered by resume id"""
        resumes = []
        if not os.path.isdir(folder_path):
            logger.warning(f"Corpus folder {folder_path} does not exist")
            return resumes

        seen = set()
        for filename in sorted(os.listdir(folder_path)):
            if not filename.lower().endswith(tuple(self.supported_formats)):
                continue
            resume_id = self.extract_resume_id(filename)
            if not resume_id or resume_id in seen:
                logger.warning(f"Skipping {filename}: empty or duplicate resume id")
                continue
            seen.add(resume_id)
            text = self.parse_resume(os.path.join(folder_path, filename))
            resumes.append(RawDocument(resume_id, text))

        logger.info(f"Found {len(resumes)} resume files in {folder_path}")
        return resumes
