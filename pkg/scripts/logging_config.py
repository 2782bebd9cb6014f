import logging
import os

from dotenv import load_dotenv

load_dotenv()

# Create a logs directory if it doesn't exist
LOGS_DIR = os.getenv("ANOSOVLAB_LOG_DIR", "logs")
os.makedirs(LOGS_DIR, exist_ok=True)

# Configure logging
LOG_FILE = os.path.join(LOGS_DIR, "anosovlab.log")
LOG_LEVEL = os.getenv("ANOSOVLAB_LOG_LEVEL", "INFO").upper()

logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO),
    format="%(asctime)s - %(levelname)s - %(message)s",
    handlers=[
        logging.FileHandler(LOG_FILE),  # Log to file
        logging.StreamHandler()        # Log to console
    ]
)

logger = logging.getLogger("anosovlab")
